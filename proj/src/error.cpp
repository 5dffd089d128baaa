// SPDX-License-Identifier: Apache-2.0
#include "chgcorr/error.hpp"

namespace chgcorr {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InsufficientMatches: return "InsufficientMatches";
    case ErrorCode::NoConsensus: return "NoConsensus";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::SingularProjection: return "SingularProjection";
    case ErrorCode::NonInvertibleTransform: return "NonInvertibleTransform";
    case ErrorCode::NoOverlap: return "NoOverlap";
    case ErrorCode::ZeroNormEmbedding: return "ZeroNormEmbedding";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyMatrix: return "EmptyMatrix";
    case ErrorCode::NonFiniteCost: return "NonFiniteCost";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::MissingScore: return "MissingScore";
    case ErrorCode::TransformUnavailable: return "TransformUnavailable";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::ChangeSceneInNoChangeSet: return "ChangeSceneInNoChangeSet";
    case ErrorCode::PlacementInfeasible: return "PlacementInfeasible";
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::MixedConfig: return "MixedConfig";
  }
  return "Unknown";
}

}  // namespace chgcorr

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace chgcorr {

enum class ErrorCode {
  InvalidArgument,
  InsufficientMatches,
  NoConsensus,
  DegenerateGeometry,
  SingularProjection,
  NonInvertibleTransform,
  NoOverlap,
  ZeroNormEmbedding,
  DimensionMismatch,
  EmptyMatrix,
  NonFiniteCost,
  IndexOutOfRange,
  MissingScore,
  TransformUnavailable,
  EmptyDataset,
  ChangeSceneInNoChangeSet,
  PlacementInfeasible,
  FileNotFound,
  ParseError,
  IoError,
  MixedConfig,
};

std::string_view to_string(ErrorCode code);

// Every failure in the library is reported through this type; `code()` is the
// stable, machine-readable part and `what()` carries human context.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

  // Same code, message prefixed with where it happened.
  Error with_context(std::string_view context) const {
    return Error(code_, std::string(context) + ": " + detail_);
  }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace chgcorr

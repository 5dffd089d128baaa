// SPDX-License-Identifier: Apache-2.0
#include "chgcorr/scene_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "chgcorr/error.hpp"

namespace chgcorr {

namespace fs = std::filesystem;

namespace {

// Schema reader: every accessor reports the JSON location on failure.
class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& where, const std::string& what) const {
    throw Error(ErrorCode::ParseError, source_ + ": at " + where + ": " + what);
  }

  const json& field(const json& obj, const std::string& key, const std::string& where) const {
    if (!obj.is_object()) fail(where, "expected an object");
    const auto it = obj.find(key);
    if (it == obj.end()) fail(where + "/" + key, "missing field");
    return *it;
  }

  const json* optional_field(const json& obj, const std::string& key) const {
    const auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return nullptr;
    return &*it;
  }

  double number(const json& j, const std::string& where) const {
    if (!j.is_number()) fail(where, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) fail(where, "number is not finite");
    return v;
  }

  std::size_t index(const json& j, const std::string& where) const {
    if (!j.is_number_unsigned()) fail(where, "expected a non-negative integer");
    return j.get<std::size_t>();
  }

  bool boolean(const json& j, const std::string& where) const {
    if (!j.is_boolean()) fail(where, "expected a boolean");
    return j.get<bool>();
  }

  std::string string(const json& j, const std::string& where) const {
    if (!j.is_string()) fail(where, "expected a string");
    return j.get<std::string>();
  }

  const json& array(const json& j, const std::string& where) const {
    if (!j.is_array()) fail(where, "expected an array");
    return j;
  }

  std::vector<double> numbers(const json& j, const std::string& where) const {
    array(j, where);
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], where + "/" + std::to_string(i)));
    return out;
  }

  BoundingBox box(const json& j, const std::string& where) const {
    const auto v = numbers(j, where);
    if (v.size() != 4 && v.size() != 5) fail(where, "a box has 4 or 5 numbers");
    BoundingBox b{v[0], v[1], v[2], v[3], {}};
    if (v.size() == 5) b.score = v[4];
    try {
      validate(b);
    } catch (const Error& e) {
      fail(where, e.detail());
    }
    return b;
  }

  std::vector<BoundingBox> boxes(const json& j, const std::string& where) const {
    array(j, where);
    std::vector<BoundingBox> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(box(j[i], where + "/" + std::to_string(i)));
    return out;
  }

  ImageExtent extent(const json& j, const std::string& where) const {
    const auto v = numbers(j, where);
    if (v.size() != 2) fail(where, "an extent is [width, height]");
    return {v[0], v[1]};
  }

  const std::string& source() const { return source_; }

 private:
  std::string source_;
};

std::string kind_name(TransformKind kind) {
  return kind == TransformKind::Affine ? "affine" : "homography";
}

TransformKind parse_kind(const std::string& s, const Reader& r, const std::string& where) {
  if (s == "affine") return TransformKind::Affine;
  if (s == "homography") return TransformKind::Homography;
  r.fail(where, "unknown transform kind '" + s + "'");
}

json extent_to_json(ImageExtent e) { return json::array({e.width, e.height}); }

json boxes_to_json(const std::vector<BoundingBox>& boxes) {
  json out = json::array();
  for (const auto& b : boxes) out.push_back(box_to_json(b));
  return out;
}

json grid_entry(const FeatureGrid& g, const std::string& data_path) {
  return {{"rows", g.rows()}, {"cols", g.cols()}, {"dim", g.dim()}, {"data_path", data_path}};
}

std::string transform_source_name(TransformSource s) {
  switch (s) {
    case TransformSource::None: return "none";
    case TransformSource::Scene: return "scene";
    case TransformSource::Estimated: return "estimated";
  }
  return "none";
}

TransformSource parse_transform_source(const std::string& s) {
  if (s == "scene") return TransformSource::Scene;
  if (s == "estimated") return TransformSource::Estimated;
  if (s == "none") return TransformSource::None;
  throw Error(ErrorCode::ParseError, "unknown transform source '" + s + "'");
}

json counts_to_json(const StageCounts& c) { return {{"left", c.left}, {"right", c.right}}; }

StageCounts counts_from_json(const json& j) {
  return {j.at("left").get<std::size_t>(), j.at("right").get<std::size_t>()};
}

json indices_to_json(const std::vector<std::size_t>& v) { return json(v); }

}  // namespace

json box_to_json(const BoundingBox& b) {
  json out = json::array({b.x1, b.y1, b.x2, b.y2});
  if (b.score) out.push_back(*b.score);
  return out;
}

json transform_to_json(const Transform& t) {
  return {{"kind", kind_name(t.kind())}, {"matrix", t.coefficients()}};
}

Transform transform_from_json(const json& j, const std::string& where) {
  Reader r("transform");
  const auto kind = parse_kind(r.string(r.field(j, "kind", where), where + "/kind"), r, where + "/kind");
  const auto values = r.numbers(r.field(j, "matrix", where), where + "/matrix");
  try {
    return Transform::from_coefficients(kind, values);
  } catch (const Error& e) {
    r.fail(where + "/matrix", e.detail());
  }
}

json scene_to_json(const Scene& scene, const std::string& left_data_path,
                   const std::string& right_data_path) {
  json doc;
  doc["scene_id"] = scene.scene_id;
  if (scene.left_extent == scene.right_extent) {
    doc["image_extent"] = extent_to_json(scene.left_extent);
  } else {
    doc["image_extent"] = {{"left", extent_to_json(scene.left_extent)},
                           {"right", extent_to_json(scene.right_extent)}};
  }
  doc["detections"] = {{"left", boxes_to_json(scene.left_detections)},
                       {"right", boxes_to_json(scene.right_detections)}};
  json corr = json::array();
  for (const auto& p : scene.gt_correspondence) corr.push_back({p.left, p.right});
  doc["gt"] = {{"left", boxes_to_json(scene.gt_left)},
               {"right", boxes_to_json(scene.gt_right)},
               {"correspondence", corr}};
  if (!scene.point_matches.empty()) {
    json matches = json::array();
    for (const auto& m : scene.point_matches) {
      json row = {m.left.x, m.left.y, m.right.x, m.right.y};
      if (m.weight) row.push_back(*m.weight);
      matches.push_back(row);
    }
    doc["point_matches"] = matches;
  }
  if (scene.transform) doc["transform"] = transform_to_json(*scene.transform);
  if (scene.left_grid && scene.right_grid)
    doc["grids"] = {{"left", grid_entry(*scene.left_grid, left_data_path)},
                    {"right", grid_entry(*scene.right_grid, right_data_path)}};
  return doc;
}

Scene scene_from_json(const json& doc, const fs::path& base_dir, const std::string& source) {
  const Reader r(source);
  if (!doc.is_object()) r.fail("/", "a scene is a JSON object");
  Scene scene;
  scene.scene_id = r.string(r.field(doc, "scene_id", ""), "/scene_id");

  const json& extent = r.field(doc, "image_extent", "");
  if (extent.is_object()) {
    scene.left_extent = r.extent(r.field(extent, "left", "/image_extent"), "/image_extent/left");
    scene.right_extent = r.extent(r.field(extent, "right", "/image_extent"), "/image_extent/right");
  } else {
    scene.left_extent = scene.right_extent = r.extent(extent, "/image_extent");
  }

  const json& dets = r.field(doc, "detections", "");
  scene.left_detections = r.boxes(r.field(dets, "left", "/detections"), "/detections/left");
  scene.right_detections = r.boxes(r.field(dets, "right", "/detections"), "/detections/right");

  const json& gt = r.field(doc, "gt", "");
  scene.gt_left = r.boxes(r.field(gt, "left", "/gt"), "/gt/left");
  scene.gt_right = r.boxes(r.field(gt, "right", "/gt"), "/gt/right");
  const json& corr = r.array(r.field(gt, "correspondence", "/gt"), "/gt/correspondence");
  for (std::size_t i = 0; i < corr.size(); ++i) {
    const std::string where = "/gt/correspondence/" + std::to_string(i);
    r.array(corr[i], where);
    if (corr[i].size() != 2) r.fail(where, "a correspondence is [left_index, right_index]");
    scene.gt_correspondence.push_back(
        {r.index(corr[i][0], where + "/0"), r.index(corr[i][1], where + "/1")});
  }

  if (const json* matches = r.optional_field(doc, "point_matches")) {
    r.array(*matches, "/point_matches");
    for (std::size_t i = 0; i < matches->size(); ++i) {
      const std::string where = "/point_matches/" + std::to_string(i);
      const auto v = r.numbers((*matches)[i], where);
      if (v.size() != 4 && v.size() != 5) r.fail(where, "a point match has 4 or 5 numbers");
      PointMatch m{{v[0], v[1]}, {v[2], v[3]}, {}};
      if (v.size() == 5) m.weight = v[4];
      try {
        validate(m);
      } catch (const Error& e) {
        r.fail(where, e.detail());
      }
      scene.point_matches.push_back(m);
    }
  }

  if (const json* t = r.optional_field(doc, "transform")) {
    const std::string where = "/transform";
    const auto kind = parse_kind(r.string(r.field(*t, "kind", where), where + "/kind"), r, where + "/kind");
    const auto values = r.numbers(r.field(*t, "matrix", where), where + "/matrix");
    try {
      scene.transform = Transform::from_coefficients(kind, values);
    } catch (const Error& e) {
      r.fail(where + "/matrix", e.detail());
    }
  }

  if (const json* grids = r.optional_field(doc, "grids")) {
    const auto load = [&](const char* side, ImageExtent ext) {
      const std::string where = std::string("/grids/") + side;
      const json& g = r.field(*grids, side, "/grids");
      const std::size_t rows = r.index(r.field(g, "rows", where), where + "/rows");
      const std::size_t cols = r.index(r.field(g, "cols", where), where + "/cols");
      const std::size_t dim = r.index(r.field(g, "dim", where), where + "/dim");
      const std::string data_path = r.string(r.field(g, "data_path", where), where + "/data_path");
      try {
        return read_grid_sidecar(base_dir / data_path, rows, cols, dim, ext);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::FileNotFound || e.code() == ErrorCode::IoError) throw;
        r.fail(where, e.detail());
      }
    };
    scene.left_grid = load("left", scene.left_extent);
    scene.right_grid = load("right", scene.right_extent);
  }

  try {
    validate(scene);
  } catch (const Error& e) {
    throw Error(e.code(), source + ": " + e.detail());
  }
  return scene;
}

void write_grid_sidecar(const fs::path& path, const FeatureGrid& grid) {
  std::string bytes(grid.data().size() * 4, '\0');
  for (std::size_t i = 0; i < grid.data().size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(grid.data()[i]);
    for (int b = 0; b < 4; ++b) bytes[i * 4 + b] = static_cast<char>((bits >> (8 * b)) & 0xFFu);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

FeatureGrid read_grid_sidecar(const fs::path& path, std::size_t rows, std::size_t cols,
                              std::size_t dim, ImageExtent extent) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileNotFound, path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::size_t expected = rows * cols * dim * 4;
  if (bytes.size() != expected)
    throw Error(ErrorCode::ParseError, path.string() + ": sidecar holds " +
                                           std::to_string(bytes.size()) + " bytes, expected " +
                                           std::to_string(expected));
  std::vector<float> data(rows * cols * dim);
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b)
      bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[i * 4 + b])) << (8 * b);
    data[i] = std::bit_cast<float>(bits);
  }
  return FeatureGrid(rows, cols, dim, std::move(data), extent);
}

void write_scene_file(const fs::path& path, const Scene& scene) {
  std::string left_name, right_name;
  if (scene.left_grid && scene.right_grid) {
    const std::string stem = path.stem().string();
    left_name = stem + "_left.f32";
    right_name = stem + "_right.f32";
    write_grid_sidecar(path.parent_path() / left_name, *scene.left_grid);
    write_grid_sidecar(path.parent_path() / right_name, *scene.right_grid);
  }
  write_json_file(path, scene_to_json(scene, left_name, right_name));
}

Scene read_scene_file(const fs::path& path) {
  return scene_from_json(read_json_file(path), path.parent_path(), path.string());
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileNotFound, path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError,
                path.string() + ": at byte " + std::to_string(e.byte) + ": " + e.what());
  }
}

void write_json_file(const fs::path& path, const json& doc) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out << doc.dump(1) << '\n';
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

json config_to_json(const PipelineConfig& cfg) {
  return {{"detection_threshold", cfg.detection_threshold},
          {"transform_kind", kind_name(cfg.transform_kind)},
          {"ransac",
           {{"inlier_threshold", cfg.ransac.inlier_threshold},
            {"max_iterations", cfg.ransac.max_iterations},
            {"min_inliers", cfg.ransac.min_inliers},
            {"seed", cfg.ransac.seed}}},
          {"alignment_enabled", cfg.alignment_enabled},
          {"hungarian_enabled", cfg.hungarian_enabled}};
}

PipelineConfig config_from_json(const json& j) {
  const Reader r("config");
  PipelineConfig cfg;
  cfg.detection_threshold = r.number(r.field(j, "detection_threshold", ""), "/detection_threshold");
  cfg.transform_kind =
      parse_kind(r.string(r.field(j, "transform_kind", ""), "/transform_kind"), r, "/transform_kind");
  const json& ransac = r.field(j, "ransac", "");
  cfg.ransac.inlier_threshold = r.number(r.field(ransac, "inlier_threshold", "/ransac"), "/ransac/inlier_threshold");
  cfg.ransac.max_iterations = r.field(ransac, "max_iterations", "/ransac").get<int>();
  cfg.ransac.min_inliers = r.field(ransac, "min_inliers", "/ransac").get<int>();
  cfg.ransac.seed = r.field(ransac, "seed", "/ransac").get<std::uint64_t>();
  cfg.alignment_enabled = r.boolean(r.field(j, "alignment_enabled", ""), "/alignment_enabled");
  cfg.hungarian_enabled = r.boolean(r.field(j, "hungarian_enabled", ""), "/hungarian_enabled");
  return cfg;
}

json diagnostics_to_json(const PipelineDiagnostics& d) {
  json out = {{"input", counts_to_json(d.input)},
              {"thresholded", counts_to_json(d.thresholded)},
              {"aligned", counts_to_json(d.aligned)},
              {"final", counts_to_json(d.final_boxes)},
              {"pairs", d.pairs},
              {"transform_source", transform_source_name(d.transform_source)},
              {"ransac_inliers", d.ransac_inliers},
              {"alignment_applied", d.alignment_applied},
              {"hungarian_applied", d.hungarian_applied}};
  if (d.alignment_fallback) out["alignment_fallback"] = *d.alignment_fallback;
  if (d.hungarian_skipped) out["hungarian_skipped"] = *d.hungarian_skipped;
  return out;
}

PipelineDiagnostics diagnostics_from_json(const json& j) {
  PipelineDiagnostics d;
  d.input = counts_from_json(j.at("input"));
  d.thresholded = counts_from_json(j.at("thresholded"));
  d.aligned = counts_from_json(j.at("aligned"));
  d.final_boxes = counts_from_json(j.at("final"));
  d.pairs = j.at("pairs").get<std::size_t>();
  d.transform_source = parse_transform_source(j.at("transform_source").get<std::string>());
  d.ransac_inliers = j.at("ransac_inliers").get<std::size_t>();
  d.alignment_applied = j.at("alignment_applied").get<bool>();
  d.hungarian_applied = j.at("hungarian_applied").get<bool>();
  if (j.contains("alignment_fallback")) d.alignment_fallback = j.at("alignment_fallback").get<std::string>();
  if (j.contains("hungarian_skipped")) d.hungarian_skipped = j.at("hungarian_skipped").get<std::string>();
  return d;
}

json result_to_json(const PipelineResult& result) {
  json pairs = json::array();
  for (const auto& p : result.pairs)
    pairs.push_back({{"left", box_to_json(p.left_box)},
                     {"right", box_to_json(p.right_box)},
                     {"cost", p.cost},
                     {"left_index", p.left_index},
                     {"right_index", p.right_index}});
  return {{"scene_id", result.scene_id},
          {"stage1", {{"left", boxes_to_json(result.stage1_left)}, {"right", boxes_to_json(result.stage1_right)}}},
          {"stage2",
           {{"left", boxes_to_json(result.stage2_left)},
            {"right", boxes_to_json(result.stage2_right)},
            {"left_index", indices_to_json(result.stage2_left_index)},
            {"right_index", indices_to_json(result.stage2_right_index)}}},
          {"pairs", pairs},
          {"transform_used", result.transform_used ? transform_to_json(*result.transform_used) : json(nullptr)},
          {"diagnostics", diagnostics_to_json(result.diagnostics)}};
}

PipelineResult result_from_json(const json& j) {
  const Reader r("result");
  PipelineResult out;
  try {
    out.scene_id = j.at("scene_id").get<std::string>();
    out.stage1_left = r.boxes(j.at("stage1").at("left"), "/stage1/left");
    out.stage1_right = r.boxes(j.at("stage1").at("right"), "/stage1/right");
    out.stage2_left = r.boxes(j.at("stage2").at("left"), "/stage2/left");
    out.stage2_right = r.boxes(j.at("stage2").at("right"), "/stage2/right");
    out.stage2_left_index = j.at("stage2").at("left_index").get<std::vector<std::size_t>>();
    out.stage2_right_index = j.at("stage2").at("right_index").get<std::vector<std::size_t>>();
    const json& pairs = j.at("pairs");
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const std::string where = "/pairs/" + std::to_string(i);
      CorrespondencePair p;
      p.left_box = r.box(pairs[i].at("left"), where + "/left");
      p.right_box = r.box(pairs[i].at("right"), where + "/right");
      p.cost = r.number(pairs[i].at("cost"), where + "/cost");
      p.left_index = pairs[i].at("left_index").get<std::size_t>();
      p.right_index = pairs[i].at("right_index").get<std::size_t>();
      out.pairs.push_back(p);
    }
    if (!j.at("transform_used").is_null())
      out.transform_used = transform_from_json(j.at("transform_used"), "/transform_used");
    out.diagnostics = diagnostics_from_json(j.at("diagnostics"));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("result record: ") + e.what());
  }
  return out;
}

}  // namespace chgcorr

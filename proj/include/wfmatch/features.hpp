#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "wfmatch/geometry.hpp"
#include "wfmatch/io.hpp"

namespace wfm {

struct Keypoint {
  double x = 0.0, y = 0.0;
  double score = 0.0;               // detector confidence in [0,1]
  std::vector<double> desc;         // unit-norm visual descriptor
};

struct LineSegment {
  double x1 = 0.0, y1 = 0.0, x2 = 0.0, y2 = 0.0;
  double score = 0.0;               // default: length / image diagonal
  std::vector<double> desc1, desc2; // per-endpoint descriptors

  double length() const { return std::hypot(x2 - x1, y2 - y1); }
  Vec2 p1() const { return {x1, y1}; }
  Vec2 p2() const { return {x2, y2}; }
};

// All per-image features for one view, immutable after load.
struct FeatureSet {
  int width = 0, height = 0;
  std::vector<Keypoint> keypoints;
  std::vector<LineSegment> lines;

  int desc_dim() const {
    if (!keypoints.empty()) return static_cast<int>(keypoints[0].desc.size());
    if (!lines.empty()) return static_cast<int>(lines[0].desc1.size());
    return 0;
  }
  double diagonal() const { return std::hypot(double(width), double(height)); }
};

struct MatchEntry {
  int a = 0, b = 0;
  double score = 0.0;
};

struct MatchFile {
  std::vector<MatchEntry> points;  // indices into wireframe nodes
  std::vector<MatchEntry> lines;   // indices into the feature sets' line order
  std::vector<int> unmatched_points_a, unmatched_points_b;
  std::vector<int> unmatched_lines_a, unmatched_lines_b;
};

// ---- validation ----

namespace detail {

inline void check_unit(const std::vector<double>& d, const std::string& where) {
  double n2 = 0.0;
  for (double v : d) n2 += v * v;
  if (std::abs(std::sqrt(n2) - 1.0) > 1e-6)
    throw Error("bad_descriptor", where + ": descriptor is not unit norm (|d| = " + std::to_string(std::sqrt(n2)) + ")");
}

inline void check_in_bounds(double x, double y, int w, int h, const std::string& where) {
  if (!(x >= 0.0 && x < w && y >= 0.0 && y < h))
    throw Error("out_of_bounds", where + ": position (" + std::to_string(x) + ", " + std::to_string(y) +
                                      ") outside " + std::to_string(w) + "x" + std::to_string(h));
}

}  // namespace detail

inline void validate(const FeatureSet& f) {
  if (f.width <= 0 || f.height <= 0) throw Error("bad_feature_set", "non-positive image size");
  const int dim = f.desc_dim();
  for (std::size_t i = 0; i < f.keypoints.size(); ++i) {
    const auto& k = f.keypoints[i];
    const std::string where = "keypoints[" + std::to_string(i) + "]";
    detail::check_in_bounds(k.x, k.y, f.width, f.height, where);
    if (static_cast<int>(k.desc.size()) != dim)
      throw Error("bad_descriptor", where + ": descriptor length " + std::to_string(k.desc.size()) +
                                        " != " + std::to_string(dim));
    detail::check_unit(k.desc, where);
  }
  for (std::size_t i = 0; i < f.lines.size(); ++i) {
    const auto& l = f.lines[i];
    const std::string where = "lines[" + std::to_string(i) + "]";
    detail::check_in_bounds(l.x1, l.y1, f.width, f.height, where);
    detail::check_in_bounds(l.x2, l.y2, f.width, f.height, where);
    if (l.length() <= 0.0) throw Error("bad_line", where + ": zero length");
    if (static_cast<int>(l.desc1.size()) != dim || static_cast<int>(l.desc2.size()) != dim)
      throw Error("bad_descriptor", where + ": descriptor length != " + std::to_string(dim));
    detail::check_unit(l.desc1, where + ".desc1");
    detail::check_unit(l.desc2, where + ".desc2");
  }
}

// ---- JSON I/O ----

inline json to_json(const FeatureSet& f) {
  json kps = json::array();
  for (const auto& k : f.keypoints)
    kps.push_back({{"x", k.x}, {"y", k.y}, {"score", k.score}, {"desc", k.desc}});
  json lines = json::array();
  for (const auto& l : f.lines)
    lines.push_back({{"x1", l.x1}, {"y1", l.y1}, {"x2", l.x2}, {"y2", l.y2},
                     {"score", l.score}, {"desc1", l.desc1}, {"desc2", l.desc2}});
  return json{{"width", f.width}, {"height", f.height}, {"keypoints", kps}, {"lines", lines}};
}

inline FeatureSet feature_set_from_json(const json& j) {
  FeatureSet f;
  try {
    f.width = j.at("width").get<int>();
    f.height = j.at("height").get<int>();
    for (const auto& jk : j.at("keypoints")) {
      Keypoint k;
      k.x = jk.at("x").get<double>();
      k.y = jk.at("y").get<double>();
      k.score = jk.at("score").get<double>();
      k.desc = jk.at("desc").get<std::vector<double>>();
      f.keypoints.push_back(std::move(k));
    }
    for (const auto& jl : j.at("lines")) {
      LineSegment l;
      l.x1 = jl.at("x1").get<double>();
      l.y1 = jl.at("y1").get<double>();
      l.x2 = jl.at("x2").get<double>();
      l.y2 = jl.at("y2").get<double>();
      l.desc1 = jl.at("desc1").get<std::vector<double>>();
      l.desc2 = jl.at("desc2").get<std::vector<double>>();
      l.score = jl.contains("score") ? jl.at("score").get<double>() : l.length() / std::hypot(double(f.width), double(f.height));
      f.lines.push_back(std::move(l));
    }
  } catch (const json::exception& e) {
    throw Error("bad_feature_set", std::string("feature set: ") + e.what());
  }
  validate(f);
  return f;
}

inline FeatureSet load_feature_set(const std::string& path) {
  try {
    return feature_set_from_json(load_json_file(path));
  } catch (const Error& e) {
    throw Error(e.code, path + ": " + e.what());
  }
}

inline void save_feature_set(const FeatureSet& f, const std::string& path) { save_json_file(path, to_json(f)); }

inline json to_json(const MatchFile& m) {
  json points = json::array(), lines = json::array();
  for (const auto& e : m.points) points.push_back({e.a, e.b, e.score});
  for (const auto& e : m.lines) lines.push_back({e.a, e.b, e.score});
  return json{{"points", points},
              {"lines", lines},
              {"unmatched_points_a", m.unmatched_points_a},
              {"unmatched_points_b", m.unmatched_points_b},
              {"unmatched_lines_a", m.unmatched_lines_a},
              {"unmatched_lines_b", m.unmatched_lines_b}};
}

inline MatchFile match_file_from_json(const json& j) {
  MatchFile m;
  try {
    auto read = [](const json& arr, std::vector<MatchEntry>& out) {
      for (const auto& e : arr) out.push_back({e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<double>()});
    };
    read(j.at("points"), m.points);
    read(j.at("lines"), m.lines);
    m.unmatched_points_a = j.value("unmatched_points_a", std::vector<int>{});
    m.unmatched_points_b = j.value("unmatched_points_b", std::vector<int>{});
    m.unmatched_lines_a = j.value("unmatched_lines_a", std::vector<int>{});
    m.unmatched_lines_b = j.value("unmatched_lines_b", std::vector<int>{});
  } catch (const json::exception& e) {
    throw Error("bad_match_file", std::string("match file: ") + e.what());
  }
  return m;
}

// ---- geometry JSON ----

inline json to_json(const Mat3& m) {
  return json{{m(0, 0), m(0, 1), m(0, 2)}, {m(1, 0), m(1, 1), m(1, 2)}, {m(2, 0), m(2, 1), m(2, 2)}};
}

inline Mat3 mat3_from_json(const json& j) {
  Mat3 m;
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) m(i, k) = j.at(i).at(k).get<double>();
  return m;
}

inline json to_json(const DepthMap& d) {
  return json{{"width", d.width}, {"height", d.height}, {"data", d.data}};
}

inline DepthMap depth_map_from_json(const json& j) {
  DepthMap d;
  d.width = j.at("width").get<int>();
  d.height = j.at("height").get<int>();
  d.data = j.at("data").get<std::vector<double>>();
  if (d.data.size() != std::size_t(d.width) * d.height)
    throw Error("bad_geometry", "depth map size mismatch");
  return d;
}

inline json to_json(const TwoViewGeometry& g) {
  if (g.kind == TwoViewGeometry::Kind::Homography) return json{{"type", "homography"}, {"H", to_json(g.H)}};
  return json{{"type", "depth_pose"}, {"K_a", to_json(g.K_a)},     {"K_b", to_json(g.K_b)},
              {"R", to_json(g.R)},    {"t", {g.t.x, g.t.y, g.t.z}}, {"depth_a", to_json(g.depth_a)},
              {"depth_b", to_json(g.depth_b)}};
}

inline TwoViewGeometry geometry_from_json(const json& j) {
  TwoViewGeometry g;
  try {
    const std::string type = j.at("type").get<std::string>();
    if (type == "homography") {
      g.kind = TwoViewGeometry::Kind::Homography;
      g.H = mat3_from_json(j.at("H"));
      if (std::abs(det(g.H)) < 1e-12) throw Error("bad_geometry", "homography is singular");
    } else if (type == "depth_pose") {
      g.kind = TwoViewGeometry::Kind::DepthPose;
      g.K_a = mat3_from_json(j.at("K_a"));
      g.K_b = mat3_from_json(j.at("K_b"));
      g.R = mat3_from_json(j.at("R"));
      g.t = {j.at("t").at(0).get<double>(), j.at("t").at(1).get<double>(), j.at("t").at(2).get<double>()};
      g.depth_a = depth_map_from_json(j.at("depth_a"));
      g.depth_b = depth_map_from_json(j.at("depth_b"));
    } else {
      throw Error("bad_geometry", "unknown geometry type '" + type + "'");
    }
  } catch (const json::exception& e) {
    throw Error("bad_geometry", std::string("geometry: ") + e.what());
  }
  return g;
}

inline TwoViewGeometry load_geometry(const std::string& path) {
  try {
    return geometry_from_json(load_json_file(path));
  } catch (const Error& e) {
    throw Error(e.code, path + ": " + e.what());
  }
}

}  // namespace wfm

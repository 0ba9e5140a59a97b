#pragma once

#include <algorithm>
#include <vector>

#include "wfmatch/features.hpp"
#include "wfmatch/hungarian.hpp"
#include "wfmatch/wireframe.hpp"

namespace wfm {

struct GtConfig {
  double t_occlusion = 0.1;     // relative depth tolerance
  double t_dist = 5.0;          // px, sample-to-line closeness
  double t_overlap = 0.2;       // fraction of K required on both sides
  int samples_per_line = 10;    // K
  double point_radius = 3.0;    // px, reprojection neighborhood
  double invalid_fraction = 0.5;  // above this a line is IGNORE
};

// MATCHED / UNMATCHED / IGNORE partition for one pair. Points with an invalid
// or out-of-bounds projection appear in no list (implicit ignore).
struct GtLabels {
  std::vector<std::pair<int, int>> point_matches;
  std::vector<int> point_unmatched_a, point_unmatched_b;
  std::vector<int> point_ignored_a, point_ignored_b;  // not serialized

  std::vector<std::pair<int, int>> line_matches;
  std::vector<int> line_unmatched_a, line_unmatched_b;
  std::vector<int> line_ignore_a, line_ignore_b;
};

inline json to_json(const GtLabels& g) {
  auto pairs = [](const std::vector<std::pair<int, int>>& v) {
    json a = json::array();
    for (const auto& [i, j] : v) a.push_back({i, j});
    return a;
  };
  return json{{"points",
               {{"matches", pairs(g.point_matches)},
                {"unmatched_a", g.point_unmatched_a},
                {"unmatched_b", g.point_unmatched_b}}},
              {"lines",
               {{"matches", pairs(g.line_matches)},
                {"unmatched_a", g.line_unmatched_a},
                {"unmatched_b", g.line_unmatched_b},
                {"ignore_a", g.line_ignore_a},
                {"ignore_b", g.line_ignore_b}}}};
}

inline GtLabels gt_labels_from_json(const json& j) {
  GtLabels g;
  try {
    auto pairs = [](const json& a) {
      std::vector<std::pair<int, int>> v;
      for (const auto& e : a) v.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
      return v;
    };
    g.point_matches = pairs(j.at("points").at("matches"));
    g.point_unmatched_a = j.at("points").at("unmatched_a").get<std::vector<int>>();
    g.point_unmatched_b = j.at("points").at("unmatched_b").get<std::vector<int>>();
    g.line_matches = pairs(j.at("lines").at("matches"));
    g.line_unmatched_a = j.at("lines").at("unmatched_a").get<std::vector<int>>();
    g.line_unmatched_b = j.at("lines").at("unmatched_b").get<std::vector<int>>();
    g.line_ignore_a = j.at("lines").at("ignore_a").get<std::vector<int>>();
    g.line_ignore_b = j.at("lines").at("ignore_b").get<std::vector<int>>();
  } catch (const json::exception& e) {
    throw Error("bad_gt_file", std::string("gt labels: ") + e.what());
  }
  return g;
}

// ---- reprojection ----

struct PointProjection {
  Vec2 pixel;
  bool valid = false;  // in bounds, with defined and unoccluded depth
};

inline PointProjection project_point(Vec2 x, const TwoViewGeometry& g, bool a_to_b, int tgt_w, int tgt_h,
                                     const GtConfig& cfg) {
  PointProjection out;
  if (g.kind == TwoViewGeometry::Kind::Homography) {
    out.pixel = warp_point(a_to_b ? g.H : g.h_inverse(), x);
    out.valid = out.pixel.x >= 0.0 && out.pixel.x < tgt_w && out.pixel.y >= 0.0 && out.pixel.y < tgt_h;
  } else {
    const DepthProjection d = project_with_depth(x, g, a_to_b);
    out.pixel = d.pixel;
    out.valid = d.valid && !occluded(d, cfg.t_occlusion) && d.pixel.x >= 0.0 && d.pixel.x < tgt_w &&
                d.pixel.y >= 0.0 && d.pixel.y < tgt_h;
  }
  return out;
}

// ---- point ground truth ----

struct PointGt {
  std::vector<std::pair<int, int>> matches;
  std::vector<int> unmatched_a, unmatched_b;
  std::vector<int> ignored_a, ignored_b;
};

// Candidates are symmetric reprojection hits within the radius; conflicts are
// resolved one-to-one by the Hungarian solver on reprojection distance.
inline PointGt gt_point_matches(const std::vector<Vec2>& pts_a, const std::vector<Vec2>& pts_b,
                                const TwoViewGeometry& g, const GtConfig& cfg, int wa, int ha, int wb, int hb) {
  const int m = static_cast<int>(pts_a.size());
  const int n = static_cast<int>(pts_b.size());
  std::vector<PointProjection> proj_a(m), proj_b(n);
  for (int i = 0; i < m; ++i) proj_a[i] = project_point(pts_a[i], g, true, wb, hb, cfg);
  for (int j = 0; j < n; ++j) proj_b[j] = project_point(pts_b[j], g, false, wa, ha, cfg);

  // being matched must always beat staying unmatched, so candidate costs are
  // shifted below zero
  const double bias = 2.0 * cfg.point_radius + 1.0;
  std::vector<std::vector<double>> cost(m, std::vector<double>(n, kForbidden));
  for (int i = 0; i < m; ++i) {
    if (!proj_a[i].valid) continue;
    for (int j = 0; j < n; ++j) {
      if (!proj_b[j].valid) continue;
      const double d_ab = dist(proj_a[i].pixel, pts_b[j]);
      const double d_ba = dist(proj_b[j].pixel, pts_a[i]);
      if (d_ab <= cfg.point_radius && d_ba <= cfg.point_radius) cost[i][j] = 0.5 * (d_ab + d_ba) - bias;
    }
  }

  PointGt out;
  std::vector<bool> am(m, false), bm(n, false);
  if (m > 0 && n > 0) {
    Assignment asn = hungarian(cost);
    std::sort(asn.pairs.begin(), asn.pairs.end());
    for (const auto& [i, j] : asn.pairs) {
      out.matches.emplace_back(i, j);
      am[i] = bm[j] = true;
    }
  }
  for (int i = 0; i < m; ++i)
    if (!am[i]) (proj_a[i].valid ? out.unmatched_a : out.ignored_a).push_back(i);
  for (int j = 0; j < n; ++j)
    if (!bm[j]) (proj_b[j].valid ? out.unmatched_b : out.ignored_b).push_back(j);
  return out;
}

inline std::vector<Vec2> keypoint_positions(const FeatureSet& f) {
  std::vector<Vec2> p;
  p.reserve(f.keypoints.size());
  for (const auto& k : f.keypoints) p.push_back({k.x, k.y});
  return p;
}

inline std::vector<Vec2> node_positions(const Wireframe& w) {
  std::vector<Vec2> p;
  p.reserve(w.nodes.size());
  for (const auto& n : w.nodes) p.push_back({n.x, n.y});
  return p;
}

inline PointGt gt_point_matches(const FeatureSet& fa, const FeatureSet& fb, const TwoViewGeometry& g,
                                const GtConfig& cfg) {
  return gt_point_matches(keypoint_positions(fa), keypoint_positions(fb), g, cfg, fa.width, fa.height, fb.width,
                          fb.height);
}

// ---- line ground truth ----

struct LineSample {
  Vec2 position;    // on the source segment
  Vec2 projection;  // in the target image
  bool valid = false;
};

// K samples spread uniformly over the segment, endpoints included, each
// checked for depth validity, bounds and occlusion.
inline std::vector<LineSample> validate_line_samples(Vec2 p1, Vec2 p2, const TwoViewGeometry& g, bool a_to_b,
                                                     const GtConfig& cfg, int tgt_w, int tgt_h) {
  require_shape(cfg.samples_per_line >= 2, "validate_line_samples: need at least 2 samples");
  std::vector<LineSample> out(cfg.samples_per_line);
  for (int k = 0; k < cfg.samples_per_line; ++k) {
    const double t = double(k) / (cfg.samples_per_line - 1);
    LineSample& s = out[k];
    s.position = {p1.x + t * (p2.x - p1.x), p1.y + t * (p2.y - p1.y)};
    const PointProjection proj = project_point(s.position, g, a_to_b, tgt_w, tgt_h, cfg);
    s.projection = proj.pixel;
    s.valid = proj.valid;
  }
  return out;
}

struct ClosenessResult {
  // a_to_b[i][j]: samples of A-line i landing within t_dist of B-line j
  std::vector<std::vector<int>> a_to_b;  // M x N
  std::vector<std::vector<int>> b_to_a;  // N x M
  std::vector<double> invalid_frac_a, invalid_frac_b;
};

inline ClosenessResult closeness_matrices(const FeatureSet& fa, const FeatureSet& fb, const TwoViewGeometry& g,
                                          const GtConfig& cfg) {
  const int m = static_cast<int>(fa.lines.size());
  const int n = static_cast<int>(fb.lines.size());
  ClosenessResult r;
  r.a_to_b.assign(m, std::vector<int>(n, 0));
  r.b_to_a.assign(n, std::vector<int>(m, 0));
  r.invalid_frac_a.assign(m, 0.0);
  r.invalid_frac_b.assign(n, 0.0);

  for (int i = 0; i < m; ++i) {
    const auto samples = validate_line_samples(fa.lines[i].p1(), fa.lines[i].p2(), g, true, cfg, fb.width, fb.height);
    int invalid = 0;
    for (const auto& s : samples) {
      if (!s.valid) {
        ++invalid;
        continue;
      }
      for (int j = 0; j < n; ++j)
        if (point_segment_distance(s.projection, fb.lines[j].p1(), fb.lines[j].p2()) < cfg.t_dist) ++r.a_to_b[i][j];
    }
    r.invalid_frac_a[i] = double(invalid) / samples.size();
  }
  for (int j = 0; j < n; ++j) {
    const auto samples = validate_line_samples(fb.lines[j].p1(), fb.lines[j].p2(), g, false, cfg, fa.width, fa.height);
    int invalid = 0;
    for (const auto& s : samples) {
      if (!s.valid) {
        ++invalid;
        continue;
      }
      for (int i = 0; i < m; ++i)
        if (point_segment_distance(s.projection, fa.lines[i].p1(), fa.lines[i].p2()) < cfg.t_dist) ++r.b_to_a[j][i];
    }
    r.invalid_frac_b[j] = double(invalid) / samples.size();
  }
  return r;
}

struct LineGt {
  std::vector<std::pair<int, int>> matches;
  std::vector<int> unmatched_a, unmatched_b;
  std::vector<int> ignore_a, ignore_b;
};

// Cost is -C_ab * C_ba where both overlaps clear the threshold, forbidden
// otherwise; IGNORE lines are excluded before the assignment. The Hungarian
// solve runs on a canonical orientation of the cost matrix so that swapping
// the images transposes the result exactly.
inline LineGt line_labels(const ClosenessResult& c, const GtConfig& cfg) {
  const int m = static_cast<int>(c.invalid_frac_a.size());
  const int n = static_cast<int>(c.invalid_frac_b.size());
  const double need = cfg.t_overlap * cfg.samples_per_line;

  LineGt out;
  std::vector<int> rows, cols;
  for (int i = 0; i < m; ++i)
    (c.invalid_frac_a[i] > cfg.invalid_fraction ? out.ignore_a : rows).push_back(i);
  for (int j = 0; j < n; ++j)
    (c.invalid_frac_b[j] > cfg.invalid_fraction ? out.ignore_b : cols).push_back(j);

  std::vector<std::vector<double>> cost(rows.size(), std::vector<double>(cols.size(), kForbidden));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t cc = 0; cc < cols.size(); ++cc) {
      const int ca = c.a_to_b[rows[r]][cols[cc]];
      const int cb = c.b_to_a[cols[cc]][rows[r]];
      if (ca >= need && cb >= need) cost[r][cc] = -double(ca) * double(cb);
    }

  auto flat = [](const std::vector<std::vector<double>>& mat, bool transpose) {
    std::vector<double> v;
    if (mat.empty()) return v;
    const int rr = static_cast<int>(mat.size()), nc = static_cast<int>(mat[0].size());
    if (!transpose) {
      for (int i = 0; i < rr; ++i)
        for (int j = 0; j < nc; ++j) v.push_back(mat[i][j]);
    } else {
      for (int j = 0; j < nc; ++j)
        for (int i = 0; i < rr; ++i) v.push_back(mat[i][j]);
    }
    return v;
  };

  Assignment asn;
  const std::vector<double> fwd = flat(cost, false), bwd = flat(cost, true);
  const bool same_dims = rows.size() == cols.size();
  if (!same_dims ? rows.size() < cols.size() : !std::lexicographical_compare(bwd.begin(), bwd.end(), fwd.begin(), fwd.end())) {
    asn = hungarian(cost);
  } else {
    std::vector<std::vector<double>> tc(cols.size(), std::vector<double>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (std::size_t cc = 0; cc < cols.size(); ++cc) tc[cc][r] = cost[r][cc];
    asn = hungarian(tc);
    for (auto& [i, j] : asn.pairs) std::swap(i, j);
  }

  std::vector<bool> am(m, false), bm(n, false);
  std::sort(asn.pairs.begin(), asn.pairs.end());
  for (const auto& [r, cc] : asn.pairs) {
    out.matches.emplace_back(rows[r], cols[cc]);
    am[rows[r]] = bm[cols[cc]] = true;
  }
  std::sort(out.matches.begin(), out.matches.end());
  for (int i : rows)
    if (!am[i]) out.unmatched_a.push_back(i);
  for (int j : cols)
    if (!bm[j]) out.unmatched_b.push_back(j);
  return out;
}

inline LineGt gt_line_matches(const FeatureSet& fa, const FeatureSet& fb, const TwoViewGeometry& g,
                              const GtConfig& cfg) {
  return line_labels(closeness_matrices(fa, fb, g, cfg), cfg);
}

// Full labels for one pair. Point labels are generated on the given point
// sets (wireframe nodes in the training pipeline, keypoints for the
// keypoint-level CLI mode).
inline GtLabels make_gt_labels(const std::vector<Vec2>& pts_a, const std::vector<Vec2>& pts_b,
                               const FeatureSet& fa, const FeatureSet& fb, const TwoViewGeometry& g,
                               const GtConfig& cfg) {
  GtLabels out;
  const PointGt p = gt_point_matches(pts_a, pts_b, g, cfg, fa.width, fa.height, fb.width, fb.height);
  out.point_matches = p.matches;
  out.point_unmatched_a = p.unmatched_a;
  out.point_unmatched_b = p.unmatched_b;
  out.point_ignored_a = p.ignored_a;
  out.point_ignored_b = p.ignored_b;
  const LineGt l = gt_line_matches(fa, fb, g, cfg);
  out.line_matches = l.matches;
  out.line_unmatched_a = l.unmatched_a;
  out.line_unmatched_b = l.unmatched_b;
  out.line_ignore_a = l.ignore_a;
  out.line_ignore_b = l.ignore_b;
  return out;
}

}  // namespace wfm

#pragma once

#include <optional>
#include <random>

#include "wfmatch/geometry.hpp"
#include "wfmatch/io.hpp"
#include "wfmatch/svd3.hpp"

namespace wfm {

struct BearingPair {
  enum class Kind { Point, LineNormal };
  Vec3 v_a, v_b;  // unit vectors
  Kind kind = Kind::Point;
  double weight = 1.0;
};

// normalize(K^{-1} [x, y, 1])
inline Vec3 lift_point(Vec2 x, const Mat3& k) {
  return normalized(inverse(k) * Vec3{x.x, x.y, 1.0});
}

// Normal of the plane through the camera center and the segment.
inline Vec3 lift_line(Vec2 p1, Vec2 p2, const Mat3& k) {
  require_shape(dist(p1, p2) > 0.0, "lift_line: coincident endpoints");
  const Mat3 kinv = inverse(k);
  const Vec3 n = cross(kinv * Vec3{p1.x, p1.y, 1.0}, kinv * Vec3{p2.x, p2.y, 1.0});
  require_shape(norm(n) > 1e-12, "lift_line: degenerate direction");
  return normalized(n);
}

// Endpoint order flips the normal sign; forcing a positive dot product makes
// the pair consistent for rotations below 180 degrees. Ties (dot == 0) are
// left untouched.
inline std::pair<Vec3, Vec3> fix_normal_signs(Vec3 n_a, Vec3 n_b) {
  if (dot(n_a, n_b) < 0.0) n_b = -1.0 * n_b;
  return {n_a, n_b};
}

// Weighted Kabsch: R = argmin sum w |v_b - R v_a|^2 via SVD of the covariance
// with the determinant-sign correction.
inline Mat3 kabsch_rotation(const std::vector<BearingPair>& pairs) {
  require_shape(pairs.size() >= 2, "kabsch: need at least 2 pairs");
  Mat3 cov = Mat3::zero();
  for (const auto& p : pairs)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) cov(i, j) += p.weight * p.v_b[i] * p.v_a[j];
  const Svd3 f = svd3(cov);
  if (f.s.y <= 1e-12 * std::max(f.s.x, 1e-300))
    throw Error("degenerate_configuration", "kabsch: bearings are collinear");
  const double sign = det(f.u * transposed(f.v)) < 0.0 ? -1.0 : 1.0;
  return f.u * Mat3::diag(1.0, 1.0, sign) * transposed(f.v);
}

inline double angular_residual_deg(Vec3 a, Vec3 b) {
  const double c = std::clamp(dot(a, b), -1.0, 1.0);
  return std::acos(c) * 180.0 / M_PI;
}

struct RansacConfig {
  int iterations = 200;
  double inlier_threshold_deg = 1.0;
  uint64_t seed = 0;
};

struct PointMatchObs {
  Vec3 v_a, v_b;
};
struct LineMatchObs {
  Vec3 n_a, n_b;        // sign-fixed on construction
  double sample_weight;  // proportional to sqrt(length)
};

struct RotationEstimate {
  Mat3 rotation;
  std::vector<int> point_inliers, line_inliers;
  int num_inliers() const { return static_cast<int>(point_inliers.size() + line_inliers.size()); }
};

// Hybrid 2-sample RANSAC over point bearings and line normals. Feature type
// is drawn proportionally to match counts; points uniformly, lines
// proportionally to sqrt(length). Per-iteration rng streams derive from
// (seed, iteration), so the estimate is reproducible and iteration order
// independent.
inline std::optional<RotationEstimate> hybrid_ransac_rotation(const std::vector<PointMatchObs>& points,
                                                              const std::vector<LineMatchObs>& lines,
                                                              const RansacConfig& cfg) {
  const int np = static_cast<int>(points.size());
  const int nl = static_cast<int>(lines.size());
  if (np + nl < 2) return std::nullopt;

  std::vector<double> line_cdf(nl, 0.0);
  double line_total = 0.0;
  for (int i = 0; i < nl; ++i) {
    line_total += lines[i].sample_weight;
    line_cdf[i] = line_total;
  }

  auto count_inliers = [&](const Mat3& r, RotationEstimate& est) {
    est.point_inliers.clear();
    est.line_inliers.clear();
    for (int i = 0; i < np; ++i)
      if (angular_residual_deg(r * points[i].v_a, points[i].v_b) < cfg.inlier_threshold_deg)
        est.point_inliers.push_back(i);
    for (int i = 0; i < nl; ++i)
      if (angular_residual_deg(r * lines[i].n_a, lines[i].n_b) < cfg.inlier_threshold_deg)
        est.line_inliers.push_back(i);
  };

  std::optional<RotationEstimate> best;
  for (int iter = 0; iter < cfg.iterations; ++iter) {
    std::mt19937_64 rng(mix_seed(cfg.seed, iter));
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    // sample 2 distinct matches; type chosen by match-count proportion
    std::vector<std::pair<int, int>> picked;  // (0=point, 1=line, index)
    int guard = 0;
    while (picked.size() < 2 && guard++ < 64) {
      const bool take_line = u01(rng) * (np + nl) >= np;
      std::pair<int, int> choice;
      if (take_line && nl > 0) {
        const double x = u01(rng) * line_total;
        const int idx = static_cast<int>(std::lower_bound(line_cdf.begin(), line_cdf.end(), x) - line_cdf.begin());
        choice = {1, std::min(idx, nl - 1)};
      } else if (!take_line && np > 0) {
        choice = {0, std::min(static_cast<int>(u01(rng) * np), np - 1)};
      } else {
        continue;
      }
      if (picked.empty() || picked[0] != choice) picked.push_back(choice);
    }
    if (picked.size() < 2) continue;

    std::vector<BearingPair> minimal;
    for (const auto& [kind, idx] : picked) {
      if (kind == 0)
        minimal.push_back({points[idx].v_a, points[idx].v_b, BearingPair::Kind::Point, 1.0});
      else
        minimal.push_back({lines[idx].n_a, lines[idx].n_b, BearingPair::Kind::LineNormal, 1.0});
    }
    Mat3 r;
    try {
      r = kabsch_rotation(minimal);
    } catch (const Error&) {
      continue;  // collinear sample
    }

    RotationEstimate est;
    est.rotation = r;
    count_inliers(r, est);
    if (!best || est.num_inliers() > best->num_inliers()) best = est;
  }

  if (!best || best->num_inliers() < 2) return std::nullopt;

  // least-squares refit on the best inlier set
  std::vector<BearingPair> support;
  for (int i : best->point_inliers) support.push_back({points[i].v_a, points[i].v_b, BearingPair::Kind::Point, 1.0});
  for (int i : best->line_inliers)
    support.push_back({lines[i].n_a, lines[i].n_b, BearingPair::Kind::LineNormal, 1.0});
  try {
    best->rotation = kabsch_rotation(support);
    count_inliers(best->rotation, *best);
  } catch (const Error&) {
    // keep the minimal-model rotation if the refit is degenerate
  }
  return best;
}

// Pixel-level adapter: lifts point matches to bearings and line matches to
// sign-fixed plane normals before running the estimator.
inline std::optional<RotationEstimate> hybrid_ransac_rotation(
    const std::vector<std::pair<Vec2, Vec2>>& point_matches,
    const std::vector<std::pair<std::array<Vec2, 2>, std::array<Vec2, 2>>>& line_matches, const Mat3& k_a,
    const Mat3& k_b, const RansacConfig& cfg) {
  std::vector<PointMatchObs> points;
  points.reserve(point_matches.size());
  for (const auto& [pa, pb] : point_matches) points.push_back({lift_point(pa, k_a), lift_point(pb, k_b)});
  std::vector<LineMatchObs> lines;
  lines.reserve(line_matches.size());
  for (const auto& [la, lb] : line_matches) {
    auto [na, nb] = fix_normal_signs(lift_line(la[0], la[1], k_a), lift_line(lb[0], lb[1], k_b));
    const double len = 0.5 * (dist(la[0], la[1]) + dist(lb[0], lb[1]));
    lines.push_back({na, nb, std::sqrt(len)});
  }
  return hybrid_ransac_rotation(points, lines, cfg);
}

}  // namespace wfm

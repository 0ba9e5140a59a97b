#pragma once

#include <optional>
#include <random>

#include "wfmatch/features.hpp"
#include "wfmatch/groundtruth.hpp"

namespace wfm {

struct SynthConfig {
  int width = 320, height = 240;
  int n_keypoints = 30;
  int n_lines = 10;
  int desc_dim = 16;
  double min_line_len = 24.0, max_line_len = 90.0;
  double p_chain = 0.45;  // chance a segment starts at the previous one's end

  // perturbation maxima; the effective magnitude is max * difficulty
  double max_rotation_deg = 25.0;
  double max_translation_frac = 0.12;
  double max_log_scale = 0.2;
  double max_perspective = 4e-4;
  double max_desc_noise = 0.45;
  double max_jitter_px = 1.0;
  double max_dropout = 0.15;
  double max_distractor_frac = 0.3;

  // fraction of line endpoints drawing their identity descriptor from a small
  // shared codebook (repeated structure, resolvable only through context)
  double line_codebook_frac = 0.5;
  int codebook_size = 3;

  double margin = 20.0;
  std::optional<double> force_dropout_a, force_dropout_b;  // test hooks
};

struct SyntheticPair {
  FeatureSet a, b;
  TwoViewGeometry geom;  // homography A -> B
  // planted survivor correspondences, in feature-set index spaces
  std::vector<std::pair<int, int>> planted_point_matches;
  std::vector<std::pair<int, int>> planted_line_matches;
  double difficulty = 0.0;
};

namespace detail {

inline std::vector<double> random_unit(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  std::vector<double> d(dim);
  double n2 = 0.0;
  for (double& v : d) {
    v = n(rng);
    n2 += v * v;
  }
  for (double& v : d) v /= std::sqrt(n2);
  return d;
}

inline std::vector<double> noisy_unit(const std::vector<double>& id, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, sigma);
  std::vector<double> d = id;
  double n2 = 0.0;
  for (double& v : d) {
    v += n(rng);
    n2 += v * v;
  }
  const double nn = std::sqrt(n2);
  if (nn < 1e-9) return id;
  for (double& v : d) v /= nn;
  return d;
}

}  // namespace detail

// Perturbation homography about the image center; every magnitude scales
// linearly with difficulty, so difficulty 0 is the exact identity.
inline Mat3 sample_homography(const SynthConfig& cfg, double difficulty, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int attempt = 0; attempt < 100; ++attempt) {
    const double rot = cfg.max_rotation_deg * M_PI / 180.0 * difficulty * u(rng);
    const double scale = std::exp(cfg.max_log_scale * difficulty * u(rng));
    const double tx = cfg.max_translation_frac * cfg.width * difficulty * u(rng);
    const double ty = cfg.max_translation_frac * cfg.height * difficulty * u(rng);
    const double px = cfg.max_perspective * difficulty * u(rng);
    const double py = cfg.max_perspective * difficulty * u(rng);

    const double c = std::cos(rot), s = std::sin(rot);
    const Mat3 rs{{scale * c, -scale * s, 0, scale * s, scale * c, 0, 0, 0, 1}};
    const Mat3 persp{{1, 0, 0, 0, 1, 0, px, py, 1}};
    const Mat3 shift{{1, 0, tx, 0, 1, ty, 0, 0, 1}};
    const Mat3 center{{1, 0, cfg.width / 2.0, 0, 1, cfg.height / 2.0, 0, 0, 1}};
    const Mat3 uncenter{{1, 0, -cfg.width / 2.0, 0, 1, -cfg.height / 2.0, 0, 0, 1}};
    const Mat3 h = center * persp * rs * shift * uncenter;

    if (std::abs(det(h)) < 1e-6) continue;
    bool ok = true;
    for (const Vec2 corner : {Vec2{0, 0}, Vec2{double(cfg.width), 0}, Vec2{0, double(cfg.height)},
                              Vec2{double(cfg.width), double(cfg.height)}}) {
      const Vec3 q = h * Vec3{corner.x, corner.y, 1.0};
      if (q.z < 0.1) ok = false;
    }
    if (ok) return h;
  }
  throw Error("degenerate_homography", "could not sample a usable homography");
}

// One canonical scene plus two augmented views related by a homography.
// Planted labels record which features survived in both views.
inline SyntheticPair generate_synthetic_pair(const SynthConfig& cfg, double difficulty, std::mt19937_64& rng) {
  require_shape(difficulty >= 0.0 && difficulty <= 1.0, "difficulty must be in [0,1]");
  SyntheticPair out;
  out.difficulty = difficulty;

  std::uniform_real_distribution<double> ux(cfg.margin, cfg.width - cfg.margin);
  std::uniform_real_distribution<double> uy(cfg.margin, cfg.height - cfg.margin);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_real_distribution<double> ulen(cfg.min_line_len, cfg.max_line_len);
  std::uniform_real_distribution<double> uang(0.0, 2.0 * M_PI);
  std::normal_distribution<double> gauss;

  // scene: persistent identity descriptors, partially drawn from a codebook
  std::vector<std::vector<double>> codebook;
  for (int c = 0; c < cfg.codebook_size; ++c) codebook.push_back(detail::random_unit(cfg.desc_dim, rng));
  auto endpoint_identity = [&]() {
    if (u01(rng) < cfg.line_codebook_frac)
      return codebook[std::uniform_int_distribution<int>(0, cfg.codebook_size - 1)(rng)];
    return detail::random_unit(cfg.desc_dim, rng);
  };

  struct ScenePoint {
    Vec2 p;
    double score;
    std::vector<double> id;
  };
  struct SceneLine {
    Vec2 p1, p2;
    std::vector<double> id1, id2;
  };
  std::vector<ScenePoint> points;
  std::vector<SceneLine> lines;
  for (int i = 0; i < cfg.n_keypoints; ++i)
    points.push_back({{ux(rng), uy(rng)}, 0.3 + 0.7 * u01(rng), detail::random_unit(cfg.desc_dim, rng)});
  Vec2 cursor{ux(rng), uy(rng)};
  for (int i = 0; i < cfg.n_lines; ++i) {
    Vec2 start = (i > 0 && u01(rng) < cfg.p_chain) ? cursor : Vec2{ux(rng), uy(rng)};
    Vec2 end;
    int tries = 0;
    do {
      const double len = ulen(rng), ang = uang(rng);
      end = {start.x + len * std::cos(ang), start.y + len * std::sin(ang)};
      if (++tries > 200) {
        start = {ux(rng), uy(rng)};
        tries = 0;
      }
    } while (end.x < cfg.margin || end.x > cfg.width - cfg.margin || end.y < cfg.margin ||
             end.y > cfg.height - cfg.margin);
    lines.push_back({start, end, endpoint_identity(), endpoint_identity()});
    cursor = end;
  }

  const Mat3 h = sample_homography(cfg, difficulty, rng);
  out.geom.kind = TwoViewGeometry::Kind::Homography;
  out.geom.H = h;

  const double sigma = cfg.max_desc_noise * difficulty;
  const double jitter = cfg.max_jitter_px * difficulty;
  const double dropout_a = cfg.force_dropout_a.value_or(cfg.max_dropout * difficulty);
  const double dropout_b = cfg.force_dropout_b.value_or(cfg.max_dropout * difficulty);
  const int distractor_kp = static_cast<int>(std::lround(cfg.max_distractor_frac * difficulty * cfg.n_keypoints));
  const int distractor_ln = static_cast<int>(std::lround(cfg.max_distractor_frac * difficulty * cfg.n_lines));

  auto in_bounds = [&](Vec2 p) {
    return p.x >= 0.0 && p.x < cfg.width && p.y >= 0.0 && p.y < cfg.height;
  };

  // builds one view; scene_point_of[i] / scene_line_of[i] give provenance
  auto make_view = [&](bool warped, double dropout, std::vector<int>& scene_point_of,
                       std::vector<int>& scene_line_of) {
    FeatureSet f;
    f.width = cfg.width;
    f.height = cfg.height;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (u01(rng) < dropout) continue;
      Vec2 p = warped ? warp_point(h, points[i].p) : points[i].p;
      p.x += jitter * gauss(rng);
      p.y += jitter * gauss(rng);
      if (!in_bounds(p)) continue;
      f.keypoints.push_back({p.x, p.y, points[i].score, detail::noisy_unit(points[i].id, sigma, rng)});
      scene_point_of.push_back(static_cast<int>(i));
    }
    for (int i = 0; i < distractor_kp; ++i) {
      f.keypoints.push_back({ux(rng), uy(rng), 0.3 + 0.7 * u01(rng), detail::random_unit(cfg.desc_dim, rng)});
      scene_point_of.push_back(-1);
    }
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (u01(rng) < dropout) continue;
      Vec2 p1 = warped ? warp_point(h, lines[i].p1) : lines[i].p1;
      Vec2 p2 = warped ? warp_point(h, lines[i].p2) : lines[i].p2;
      p1.x += jitter * gauss(rng);
      p1.y += jitter * gauss(rng);
      p2.x += jitter * gauss(rng);
      p2.y += jitter * gauss(rng);
      if (!in_bounds(p1) || !in_bounds(p2)) continue;
      LineSegment l;
      l.x1 = p1.x; l.y1 = p1.y; l.x2 = p2.x; l.y2 = p2.y;
      l.score = l.length() / f.diagonal();
      l.desc1 = detail::noisy_unit(lines[i].id1, sigma, rng);
      l.desc2 = detail::noisy_unit(lines[i].id2, sigma, rng);
      f.lines.push_back(std::move(l));
      scene_line_of.push_back(static_cast<int>(i));
    }
    for (int i = 0; i < distractor_ln; ++i) {
      LineSegment l;
      int tries = 0;
      Vec2 p1{ux(rng), uy(rng)}, p2;
      do {
        const double len = ulen(rng), ang = uang(rng);
        p2 = {p1.x + len * std::cos(ang), p1.y + len * std::sin(ang)};
        if (++tries > 200) p1 = {ux(rng), uy(rng)};
      } while (!in_bounds(p2));
      l.x1 = p1.x; l.y1 = p1.y; l.x2 = p2.x; l.y2 = p2.y;
      l.score = l.length() / f.diagonal();
      l.desc1 = detail::random_unit(cfg.desc_dim, rng);
      l.desc2 = detail::random_unit(cfg.desc_dim, rng);
      f.lines.push_back(std::move(l));
      scene_line_of.push_back(-1);
    }
    return f;
  };

  std::vector<int> pa, la, pb, lb;
  out.a = make_view(false, dropout_a, pa, la);
  out.b = make_view(true, dropout_b, pb, lb);

  auto plant = [](const std::vector<int>& src_a, const std::vector<int>& src_b,
                  std::vector<std::pair<int, int>>& matches) {
    std::map<int, int> where_b;
    for (std::size_t j = 0; j < src_b.size(); ++j)
      if (src_b[j] >= 0) where_b[src_b[j]] = static_cast<int>(j);
    for (std::size_t i = 0; i < src_a.size(); ++i) {
      if (src_a[i] < 0) continue;
      auto it = where_b.find(src_a[i]);
      if (it != where_b.end()) matches.emplace_back(static_cast<int>(i), it->second);
    }
  };
  plant(pa, pb, out.planted_point_matches);
  plant(la, lb, out.planted_line_matches);
  return out;
}

inline SyntheticPair generate_synthetic_pair(const SynthConfig& cfg, double difficulty, uint64_t seed) {
  std::mt19937_64 rng(seed);
  return generate_synthetic_pair(cfg, difficulty, rng);
}

}  // namespace wfm

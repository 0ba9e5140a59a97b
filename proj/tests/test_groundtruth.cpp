#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "wfmatch/groundtruth.hpp"

using namespace wfm;

namespace {

// exhaustive minimum over all one-to-one partial assignments (finite pairs only)
double brute_force_min_cost(const std::vector<std::vector<double>>& cost) {
  const int m = static_cast<int>(cost.size());
  const int n = m > 0 ? static_cast<int>(cost[0].size()) : 0;
  double best = 0.0;
  std::vector<bool> used(n, false);
  std::function<void(int, double)> rec = [&](int row, double acc) {
    best = std::min(best, acc);
    if (row == m) return;
    rec(row + 1, acc);  // leave this row unassigned
    for (int j = 0; j < n; ++j)
      if (!used[j] && std::isfinite(cost[row][j])) {
        used[j] = true;
        rec(row + 1, acc + cost[row][j]);
        used[j] = false;
      }
  };
  rec(0, 0.0);
  return best;
}

std::vector<double> unit4() { return {1, 0, 0, 0}; }

FeatureSet line_scene(const std::vector<std::array<double, 4>>& segs, int w = 100, int h = 80) {
  FeatureSet f;
  f.width = w;
  f.height = h;
  for (const auto& s : segs) {
    LineSegment l;
    l.x1 = s[0]; l.y1 = s[1]; l.x2 = s[2]; l.y2 = s[3];
    l.score = l.length() / f.diagonal();
    l.desc1 = unit4();
    l.desc2 = unit4();
    f.lines.push_back(l);
  }
  return f;
}

TwoViewGeometry identity_homography() {
  TwoViewGeometry g;
  g.kind = TwoViewGeometry::Kind::Homography;
  g.H = Mat3::identity();
  return g;
}

}  // namespace

TEST_CASE("hungarian solver") {
  SECTION("diagonally dominant negative matrix picks the diagonal") {
    std::vector<std::vector<double>> cost{{-10, -1, -1}, {-1, -10, -1}, {-1, -1, -10}};
    Assignment a = hungarian(cost);
    REQUIRE(a.pairs.size() == 3);
    std::sort(a.pairs.begin(), a.pairs.end());
    for (int i = 0; i < 3; ++i) REQUIRE(a.pairs[i] == std::make_pair(i, i));
    REQUIRE(a.cost == Catch::Approx(-30.0));
  }

  SECTION("all-forbidden matrix yields the empty assignment") {
    std::vector<std::vector<double>> cost(3, std::vector<double>(4, kForbidden));
    Assignment a = hungarian(cost);
    REQUIRE(a.pairs.empty());
    REQUIRE(a.cost == 0.0);
  }

  SECTION("positive entries are never taken (staying unassigned is free)") {
    std::vector<std::vector<double>> cost{{2.0, kForbidden}, {kForbidden, -1.0}};
    Assignment a = hungarian(cost);
    REQUIRE(a.pairs.size() == 1);
    REQUIRE(a.pairs[0] == std::make_pair(1, 1));
  }

  SECTION("matches exhaustive enumeration with forbidden entries") {
    std::mt19937_64 rng(401);
    std::uniform_real_distribution<double> u(-5.0, 2.0), coin(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
      const int m = 2 + static_cast<int>(trial % 5);  // up to 6
      const int n = 2 + static_cast<int>((trial / 5) % 5);
      std::vector<std::vector<double>> cost(m, std::vector<double>(n));
      for (auto& row : cost)
        for (double& c : row) c = coin(rng) < 0.3 ? kForbidden : u(rng);
      Assignment a = hungarian(cost);
      // feasibility
      std::set<int> rows, cols;
      for (const auto& [i, j] : a.pairs) {
        REQUIRE(std::isfinite(cost[i][j]));
        REQUIRE(rows.insert(i).second);
        REQUIRE(cols.insert(j).second);
      }
      double sum = 0.0;
      for (const auto& [i, j] : a.pairs) sum += cost[i][j];
      REQUIRE(sum == Catch::Approx(a.cost).margin(1e-9));
      REQUIRE(a.cost == Catch::Approx(brute_force_min_cost(cost)).margin(1e-9));
    }
  }
}

TEST_CASE("point ground truth") {
  GtConfig cfg;

  SECTION("identity homography on identical sets matches everything to itself") {
    std::vector<Vec2> pts;
    std::mt19937_64 rng(403);
    std::uniform_real_distribution<double> u(5.0, 95.0);
    for (int i = 0; i < 20; ++i) pts.push_back({u(rng), u(rng)});
    PointGt gt = gt_point_matches(pts, pts, identity_homography(), cfg, 100, 100, 100, 100);
    REQUIRE(gt.matches.size() == 20);
    for (int i = 0; i < 20; ++i) REQUIRE(gt.matches[i] == std::make_pair(i, i));
    REQUIRE(gt.unmatched_a.empty());
    REQUIRE(gt.ignored_a.empty());
  }

  SECTION("out-of-bounds projection is ignored, not unmatched") {
    TwoViewGeometry g;
    g.kind = TwoViewGeometry::Kind::Homography;
    g.H = Mat3{{1, 0, 300, 0, 1, 0, 0, 0, 1}};  // everything shifts out of the 100px image
    std::vector<Vec2> a{{50, 50}}, b{{50, 50}};
    PointGt gt = gt_point_matches(a, b, g, cfg, 100, 100, 100, 100);
    REQUIRE(gt.matches.empty());
    REQUIRE(gt.ignored_a == std::vector<int>{0});
    REQUIRE(gt.unmatched_a.empty());
    // the B point's projection via H^{-1} is also out of bounds
    REQUIRE(gt.ignored_b == std::vector<int>{0});
  }

  SECTION("planted warped scene recovers the planted correspondence") {
    std::mt19937_64 rng(405);
    std::uniform_real_distribution<double> u(15.0, 85.0), jit(-0.5, 0.5);
    TwoViewGeometry g;
    g.kind = TwoViewGeometry::Kind::Homography;
    g.H = Mat3{{1.02, 0.01, 3.0, -0.01, 0.99, -2.0, 1e-5, 0.0, 1.0}};

    std::vector<Vec2> a, b;
    std::vector<std::pair<int, int>> planted;
    for (int i = 0; i < 15; ++i) {
      Vec2 p{u(rng), u(rng)};
      a.push_back(p);
      Vec2 q = warp_point(g.H, p);
      q.x += jit(rng);
      q.y += jit(rng);
      planted.emplace_back(i, static_cast<int>(b.size()));
      b.push_back(q);
    }
    b.push_back({5.0, 5.0});  // unrelated feature in B

    PointGt gt = gt_point_matches(a, b, g, cfg, 100, 100, 100, 100);
    REQUIRE(gt.matches == planted);
    REQUIRE(gt.unmatched_b == std::vector<int>{15});
  }
}

TEST_CASE("line sample validation") {
  GtConfig cfg;  // K = 10

  SECTION("homography geometry, in-bounds line: all samples valid") {
    auto samples = validate_line_samples({10, 10}, {80, 60}, identity_homography(), true, cfg, 100, 80);
    REQUIRE(samples.size() == 10);
    for (const auto& s : samples) REQUIRE(s.valid);
    REQUIRE(samples.front().position.x == 10.0);
    REQUIRE(samples.back().position.x == 80.0);
  }

  SECTION("line projecting fully outside is all-invalid and IGNOREd downstream") {
    TwoViewGeometry g;
    g.kind = TwoViewGeometry::Kind::Homography;
    g.H = Mat3{{1, 0, 500, 0, 1, 0, 0, 0, 1}};
    auto samples = validate_line_samples({10, 10}, {80, 60}, g, true, cfg, 100, 80);
    for (const auto& s : samples) REQUIRE_FALSE(s.valid);

    FeatureSet fa = line_scene({{10, 10, 80, 60}});
    FeatureSet fb = line_scene({{10, 10, 80, 60}});
    LineGt gt = gt_line_matches(fa, fb, g, cfg);
    REQUIRE(gt.ignore_a == std::vector<int>{0});
    REQUIRE(gt.matches.empty());
  }

  SECTION("two-plane scene flags the occluded stretch") {
    // A sees a far plane (z=10) everywhere; B has a near plane (z=5) over the
    // left half of its image. The pose is a pure sideways shift of one unit,
    // so a pixel in A projects 10px to the left in B.
    const int W = 100, H = 80;
    TwoViewGeometry g;
    g.kind = TwoViewGeometry::Kind::DepthPose;
    g.K_a = g.K_b = Mat3{{100, 0, 50, 0, 100, 40, 0, 0, 1}};
    g.R = Mat3::identity();
    g.t = {-1.0, 0.0, 0.0};
    g.depth_a.width = g.depth_b.width = W;
    g.depth_a.height = g.depth_b.height = H;
    g.depth_a.data.assign(std::size_t(W) * H, 10.0);
    g.depth_b.data.resize(std::size_t(W) * H);
    for (int v = 0; v < H; ++v)
      for (int u = 0; u < W; ++u) g.depth_b.data[std::size_t(v) * W + u] = u < 50 ? 5.0 : 10.0;

    auto samples = validate_line_samples({20, 40}, {80, 40}, g, true, cfg, W, H);
    for (int k = 0; k < 10; ++k) {
      const double u_a = 20.0 + k * (60.0 / 9.0);
      const double u_b = u_a - 10.0;
      const bool expect_valid = u_b >= 49.5;  // nearest-neighbor lookup boundary
      INFO("sample " << k << " at u_a=" << u_a);
      REQUIRE(samples[k].valid == expect_valid);
      if (samples[k].valid) REQUIRE(std::abs(samples[k].projection.x - u_b) < 1e-9);
    }
  }
}

TEST_CASE("closeness matrices") {
  GtConfig cfg;

  SECTION("identical scenes give K on the diagonal") {
    FeatureSet f = line_scene({{10, 10, 80, 10}, {20, 40, 90, 70}, {5, 70, 60, 20}});
    ClosenessResult c = closeness_matrices(f, f, identity_homography(), cfg);
    for (int i = 0; i < 3; ++i) REQUIRE(c.a_to_b[i][i] == cfg.samples_per_line);
  }

  SECTION("parallel lines two thresholds apart never count") {
    FeatureSet fa = line_scene({{10, 20, 90, 20}});
    FeatureSet fb = line_scene({{10, 20 + 2 * cfg.t_dist, 90, 20 + 2 * cfg.t_dist}});
    ClosenessResult c = closeness_matrices(fa, fb, identity_homography(), cfg);
    REQUIRE(c.a_to_b[0][0] == 0);
    REQUIRE(c.b_to_a[0][0] == 0);
  }

  SECTION("random configurations match a per-sample reference loop") {
    std::mt19937_64 rng(411);
    std::uniform_real_distribution<double> u(8.0, 72.0);
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<std::array<double, 4>> sa, sb;
      for (int i = 0; i < 4; ++i) sa.push_back({u(rng), u(rng), u(rng), u(rng)});
      for (int i = 0; i < 5; ++i) sb.push_back({u(rng), u(rng), u(rng), u(rng)});
      FeatureSet fa = line_scene(sa), fb = line_scene(sb);
      TwoViewGeometry g;
      g.kind = TwoViewGeometry::Kind::Homography;
      g.H = Mat3{{1.01, 0.02, 1.5, -0.015, 0.99, -1.0, 0, 0, 1}};

      ClosenessResult c = closeness_matrices(fa, fb, g, cfg);

      for (std::size_t i = 0; i < sa.size(); ++i)
        for (std::size_t j = 0; j < sb.size(); ++j) {
          int count = 0;
          for (int k = 0; k < cfg.samples_per_line; ++k) {
            const double t = double(k) / (cfg.samples_per_line - 1);
            const Vec2 p{sa[i][0] + t * (sa[i][2] - sa[i][0]), sa[i][1] + t * (sa[i][3] - sa[i][1])};
            const Vec2 q = warp_point(g.H, p);
            if (q.x < 0 || q.x >= fb.width || q.y < 0 || q.y >= fb.height) continue;
            if (point_segment_distance(q, {sb[j][0], sb[j][1]}, {sb[j][2], sb[j][3]}) < cfg.t_dist) ++count;
          }
          REQUIRE(c.a_to_b[i][j] == count);
        }
    }
  }

  SECTION("closeness is monotone in the distance threshold") {
    std::mt19937_64 rng(413);
    std::uniform_real_distribution<double> u(8.0, 72.0);
    std::vector<std::array<double, 4>> sa, sb;
    for (int i = 0; i < 4; ++i) sa.push_back({u(rng), u(rng), u(rng), u(rng)});
    for (int i = 0; i < 4; ++i) sb.push_back({u(rng), u(rng), u(rng), u(rng)});
    FeatureSet fa = line_scene(sa), fb = line_scene(sb);
    GtConfig tight = cfg, loose = cfg;
    tight.t_dist = 2.0;
    loose.t_dist = 8.0;
    ClosenessResult ct = closeness_matrices(fa, fb, identity_homography(), tight);
    ClosenessResult cl = closeness_matrices(fa, fb, identity_homography(), loose);
    for (std::size_t i = 0; i < sa.size(); ++i)
      for (std::size_t j = 0; j < sb.size(); ++j) REQUIRE(ct.a_to_b[i][j] <= cl.a_to_b[i][j]);
  }
}

TEST_CASE("line labels") {
  GtConfig cfg;

  SECTION("identical scenes match the identity pairing") {
    FeatureSet f = line_scene({{10, 10, 80, 10}, {20, 40, 90, 70}, {5, 70, 60, 20}});
    LineGt gt = gt_line_matches(f, f, identity_homography(), cfg);
    REQUIRE(gt.matches.size() == 3);
    for (int i = 0; i < 3; ++i) REQUIRE(gt.matches[i] == std::make_pair(i, i));
    REQUIRE(gt.unmatched_a.empty());
    REQUIRE(gt.unmatched_b.empty());
    REQUIRE(gt.ignore_a.empty());
  }

  SECTION("a line with no counterpart is unmatched") {
    FeatureSet fa = line_scene({{10, 10, 80, 10}});
    FeatureSet fb = line_scene({});
    LineGt gt = gt_line_matches(fa, fb, identity_homography(), cfg);
    REQUIRE(gt.matches.empty());
    REQUIRE(gt.unmatched_a == std::vector<int>{0});
  }

  SECTION("label partition covers every index exactly once") {
    std::mt19937_64 rng(417);
    std::uniform_real_distribution<double> u(8.0, 72.0);
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<std::array<double, 4>> sa, sb;
      for (int i = 0; i < 5; ++i) sa.push_back({u(rng), u(rng), u(rng), u(rng)});
      for (int i = 0; i < 6; ++i) sb.push_back({u(rng), u(rng), u(rng), u(rng)});
      FeatureSet fa = line_scene(sa), fb = line_scene(sb);
      TwoViewGeometry g;
      g.kind = TwoViewGeometry::Kind::Homography;
      g.H = Mat3{{1.0, 0.05, 8.0, -0.05, 1.0, -5.0, 0, 0, 1}};
      LineGt gt = gt_line_matches(fa, fb, g, cfg);

      std::vector<int> count_a(5, 0), count_b(6, 0);
      for (const auto& [i, j] : gt.matches) {
        ++count_a[i];
        ++count_b[j];
      }
      for (int i : gt.unmatched_a) ++count_a[i];
      for (int i : gt.ignore_a) ++count_a[i];
      for (int j : gt.unmatched_b) ++count_b[j];
      for (int j : gt.ignore_b) ++count_b[j];
      for (int c : count_a) REQUIRE(c == 1);
      for (int c : count_b) REQUIRE(c == 1);
    }
  }

  SECTION("image swap transposes the labels") {
    std::mt19937_64 rng(419);
    std::uniform_real_distribution<double> u(8.0, 72.0);
    for (int trial = 0; trial < 10; ++trial) {
      // well-separated clusters keep the assignment tie-free
      std::vector<std::array<double, 4>> sa, sb;
      for (int i = 0; i < 4; ++i) {
        const double bx = 10.0 + 20.0 * i, by = 10.0 + 15.0 * i;
        sa.push_back({bx, by, bx + 12.0 + u(rng) * 0.05, by + 3.0});
        sb.push_back({bx + 1.0, by + 0.5, bx + 13.0, by + 3.2});
      }
      FeatureSet fa = line_scene(sa), fb = line_scene(sb);
      TwoViewGeometry g = identity_homography();

      LineGt fwd = gt_line_matches(fa, fb, g, cfg);
      LineGt bwd = gt_line_matches(fb, fa, g, cfg);

      std::vector<std::pair<int, int>> flipped;
      for (auto [j, i] : bwd.matches) flipped.emplace_back(i, j);
      std::sort(flipped.begin(), flipped.end());
      REQUIRE(fwd.matches == flipped);
      REQUIRE(fwd.unmatched_a == bwd.unmatched_b);
      REQUIRE(fwd.unmatched_b == bwd.unmatched_a);
      REQUIRE(fwd.ignore_a == bwd.ignore_b);
    }
  }

  SECTION("5x6 random closeness agrees with exhaustive assignment enumeration") {
    std::mt19937_64 rng(421);
    std::uniform_int_distribution<int> uc(0, 10);
    for (int trial = 0; trial < 50; ++trial) {
      ClosenessResult c;
      const int m = 5, n = 6;
      c.a_to_b.assign(m, std::vector<int>(n));
      c.b_to_a.assign(n, std::vector<int>(m));
      c.invalid_frac_a.assign(m, 0.0);
      c.invalid_frac_b.assign(n, 0.0);
      for (auto& row : c.a_to_b)
        for (int& v : row) v = uc(rng);
      for (auto& row : c.b_to_a)
        for (int& v : row) v = uc(rng);
      c.invalid_frac_a[trial % m] = 0.6;  // one IGNORE row

      LineGt gt = line_labels(c, cfg);
      REQUIRE(gt.ignore_a == std::vector<int>{trial % m});

      // enumeration oracle over the non-ignored submatrix
      const double need = cfg.t_overlap * cfg.samples_per_line;
      std::vector<int> rows;
      for (int i = 0; i < m; ++i)
        if (i != trial % m) rows.push_back(i);
      std::vector<std::vector<double>> cost(rows.size(), std::vector<double>(n, kForbidden));
      for (std::size_t r = 0; r < rows.size(); ++r)
        for (int j = 0; j < n; ++j)
          if (c.a_to_b[rows[r]][j] >= need && c.b_to_a[j][rows[r]] >= need)
            cost[r][j] = -double(c.a_to_b[rows[r]][j]) * c.b_to_a[j][rows[r]];
      double got = 0.0;
      for (const auto& [i, j] : gt.matches) got += -double(c.a_to_b[i][j]) * c.b_to_a[j][i];
      REQUIRE(got == Catch::Approx(brute_force_min_cost(cost)).margin(1e-9));
    }
  }
}

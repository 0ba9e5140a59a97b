#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "wfmatch/assignment.hpp"

using namespace wfm;

namespace {

Tensor random_tensor(int r, int c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Tensor t = Tensor::zeros(r, c);
  for (double& v : t.data) v = n(rng);
  return t;
}

// long-double dual softmax of an augmented matrix
Tensor ref_dual_softmax(const Tensor& aug) {
  const int m = aug.rows(), n = aug.cols();
  std::vector<long double> rowsm(std::size_t(m) * n), colsm(std::size_t(m) * n);
  for (int i = 0; i < m; ++i) {
    long double mx = aug.at(i, 0);
    for (int j = 1; j < n; ++j) mx = std::max<long double>(mx, aug.at(i, j));
    long double sum = 0.0L;
    for (int j = 0; j < n; ++j) sum += expl(aug.at(i, j) - mx);
    for (int j = 0; j < n; ++j) rowsm[std::size_t(i) * n + j] = expl(aug.at(i, j) - mx) / sum;
  }
  for (int j = 0; j < n; ++j) {
    long double mx = aug.at(0, j);
    for (int i = 1; i < m; ++i) mx = std::max<long double>(mx, aug.at(i, j));
    long double sum = 0.0L;
    for (int i = 0; i < m; ++i) sum += expl(aug.at(i, j) - mx);
    for (int i = 0; i < m; ++i) colsm[std::size_t(i) * n + j] = expl(aug.at(i, j) - mx) / sum;
  }
  Tensor out = Tensor::zeros(m, n);
  for (std::size_t k = 0; k < out.data.size(); ++k)
    out.data[k] = static_cast<double>(sqrtl(rowsm[k] * colsm[k]));
  return out;
}

Tensor dual_softmax_of(const Tensor& body, double z) {
  Tape t;
  auto s = make_score_matrix(t, t.leaf(body), t.leaf(Tensor::scalar(z)));
  return t.val(dual_softmax(t, s));
}

}  // namespace

TEST_CASE("point score matrix") {
  std::mt19937_64 rng(301);

  SECTION("identical orthonormal features give the identity") {
    Tensor f = Tensor::zeros(3, 3);
    for (int i = 0; i < 3; ++i) f.at(i, i) = 1.0;
    Tape t;
    ParamStore s;
    s.tensors["dustbin.point"] = Tensor::scalar(0.5);
    Bound p(t, s);
    auto sm = point_score_matrix(p, t.leaf(f), t.leaf(f));
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) REQUIRE(t.val(sm.body).at(i, j) == (i == j ? 1.0 : 0.0));
  }

  SECTION("zero feature row gives a zero score row") {
    Tensor fa = Tensor::zeros(1, 4);
    Tensor fb = random_tensor(3, 4, rng);
    Tape t;
    ParamStore s;
    s.tensors["dustbin.point"] = Tensor::scalar(0.5);
    Bound p(t, s);
    auto sm = point_score_matrix(p, t.leaf(fa), t.leaf(fb));
    for (int j = 0; j < 3; ++j) REQUIRE(t.val(sm.body).at(0, j) == 0.0);
  }

  SECTION("matches a naive double loop") {
    Tensor fa = random_tensor(4, 6, rng), fb = random_tensor(5, 6, rng);
    Tape t;
    ParamStore s;
    s.tensors["dustbin.point"] = Tensor::scalar(0.5);
    Bound p(t, s);
    auto sm = point_score_matrix(p, t.leaf(fa), t.leaf(fb));
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 5; ++j) {
        double dot = 0.0;
        for (int k = 0; k < 6; ++k) dot += fa.at(i, k) * fb.at(j, k);
        REQUIRE(t.val(sm.body).at(i, j) == Catch::Approx(dot).margin(1e-12));
      }
    // augmented view carries the dustbin in the last row and column
    REQUIRE(t.val(sm.augmented).rows() == 5);
    REQUIRE(t.val(sm.augmented).cols() == 6);
    REQUIRE(t.val(sm.augmented).at(4, 5) == 0.5);
  }
}

TEST_CASE("dual softmax") {
  std::mt19937_64 rng(307);

  SECTION("1x1 body equal to the dustbin gives all 0.5") {
    Tensor final = dual_softmax_of(Tensor::scalar(0.7), 0.7);
    REQUIRE(final.rows() == 2);
    for (double v : final.data) REQUIRE(v == Catch::Approx(0.5).margin(1e-15));
  }

  SECTION("a dominant entry saturates towards 1") {
    Tensor body = Tensor::full(2, 2, 0.0);
    body.at(0, 0) = 50.0;
    Tensor final = dual_softmax_of(body, 0.0);
    REQUIRE(final.at(0, 0) > 0.999999);
  }

  SECTION("random matrices match the extended-precision reference") {
    for (int trial = 0; trial < 50; ++trial) {
      Tensor body = random_tensor(3, 4, rng, 3.0);
      const double z = random_tensor(1, 1, rng, 1.0).data[0];
      Tensor final = dual_softmax_of(body, z);

      Tensor aug = Tensor::full(4, 5, z);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 4; ++j) aug.at(i, j) = body.at(i, j);
      Tensor ref = ref_dual_softmax(aug);
      for (std::size_t k = 0; k < final.data.size(); ++k)
        REQUIRE(std::abs(final.data[k] - ref.data[k]) < 1e-12);
      for (double v : final.data) {
        REQUIRE(v > 0.0);
        REQUIRE(v < 1.0);
      }
    }
  }

  SECTION("row and column softmax slices sum to one over the augmented matrix") {
    for (int trial = 0; trial < 100; ++trial) {
      Tensor body = random_tensor(4, 3, rng, 2.0);
      Tape t;
      auto sm = make_score_matrix(t, t.leaf(body), t.leaf(Tensor::scalar(0.3)));
      const Tensor rowp = t.val(t.row_softmax(sm.augmented));
      const Tensor colp = t.val(t.col_softmax(sm.augmented));
      for (int i = 0; i < rowp.rows(); ++i) {
        double s = 0.0;
        for (int j = 0; j < rowp.cols(); ++j) s += rowp.at(i, j);
        REQUIRE(std::abs(s - 1.0) < 1e-9);
      }
      for (int j = 0; j < colp.cols(); ++j) {
        double s = 0.0;
        for (int i = 0; i < colp.rows(); ++i) s += colp.at(i, j);
        REQUIRE(std::abs(s - 1.0) < 1e-9);
      }
    }
  }

  SECTION("shift invariance of the final matrix and matches") {
    for (int trial = 0; trial < 100; ++trial) {
      Tensor body = random_tensor(4, 5, rng, 2.0);
      const double z = 0.2, c = std::uniform_real_distribution<double>(-10.0, 10.0)(rng);
      Tensor shifted = body;
      for (double& v : shifted.data) v += c;
      Tensor f1 = dual_softmax_of(body, z);
      Tensor f2 = dual_softmax_of(shifted, z + c);
      for (std::size_t k = 0; k < f1.data.size(); ++k) REQUIRE(std::abs(f1.data[k] - f2.data[k]) < 1e-12);

      MatchSet m1 = extract_matches(f1, 0.2), m2 = extract_matches(f2, 0.2);
      REQUIRE(m1.matches.size() == m2.matches.size());
      for (std::size_t k = 0; k < m1.matches.size(); ++k) {
        REQUIRE(m1.matches[k].a == m2.matches[k].a);
        REQUIRE(m1.matches[k].b == m2.matches[k].b);
      }
    }
  }
}

TEST_CASE("line score matrix") {
  std::mt19937_64 rng(311);

  auto two_line_wireframe = [&](double shift) {
    FeatureSet f;
    f.width = f.height = 100;
    std::normal_distribution<double> n;
    for (int i = 0; i < 4; ++i) {
      LineSegment l;
      l.x1 = 10 + 20 * i + shift;
      l.y1 = 10;
      l.x2 = 10 + 20 * i + shift;
      l.y2 = 60;
      l.score = 0.5;
      l.desc1 = {1, 0, 0, 0};
      l.desc2 = {0, 1, 0, 0};
      f.lines.push_back(l);
    }
    return build_wireframe(f, {3.0});
  };

  SECTION("endpoint swap in A is bit-identical") {
    Wireframe wa = two_line_wireframe(0.0), wb = two_line_wireframe(1.0);
    Tensor fa = random_tensor(static_cast<int>(wa.nodes.size()), 6, rng);
    Tensor fb = random_tensor(static_cast<int>(wb.nodes.size()), 6, rng);

    ParamStore s;
    s.tensors["dustbin.line"] = Tensor::scalar(0.1);
    Tape t1;
    Bound p1(t1, s);
    auto m1 = line_score_matrix(p1, t1.leaf(fa), t1.leaf(fb), wa, wb);

    Wireframe wa_sw = wa;
    std::swap(wa_sw.edges[1].node_i, wa_sw.edges[1].node_j);
    std::swap(wa_sw.edges[3].node_i, wa_sw.edges[3].node_j);
    Tape t2;
    Bound p2(t2, s);
    auto m2 = line_score_matrix(p2, t2.leaf(fa), t2.leaf(fb), wa_sw, wb);

    REQUIRE(t1.val(m1.body).data == t2.val(m2.body).data);
  }

  SECTION("equal endpoint features make the max a no-op") {
    Wireframe wa = two_line_wireframe(0.0), wb = two_line_wireframe(1.0);
    Tensor fa = Tensor::zeros(static_cast<int>(wa.nodes.size()), 4);
    Tensor fb = Tensor::zeros(static_cast<int>(wb.nodes.size()), 4);
    std::normal_distribution<double> n;
    for (std::size_t e = 0; e < wa.edges.size(); ++e) {
      for (int c = 0; c < 4; ++c) {
        const double v = n(rng);
        fa.at(wa.edges[e].node_i, c) = v;
        fa.at(wa.edges[e].node_j, c) = v;
      }
    }
    for (double& v : fb.data) v = n(rng);

    ParamStore s;
    s.tensors["dustbin.line"] = Tensor::scalar(0.1);
    Tape t;
    Bound p(t, s);
    auto sm = line_score_matrix(p, t.leaf(fa), t.leaf(fb), wa, wb);
    // both endpoint pairings produce the same sum; verify against the direct formula
    for (std::size_t i = 0; i < wa.edges.size(); ++i)
      for (std::size_t j = 0; j < wb.edges.size(); ++j) {
        double straight = 0.0;
        for (int c = 0; c < 4; ++c)
          straight += fa.at(wa.edges[i].node_i, c) * fb.at(wb.edges[j].node_i, c) +
                      fa.at(wa.edges[i].node_j, c) * fb.at(wb.edges[j].node_j, c);
        REQUIRE(t.val(sm.body).at(static_cast<int>(i), static_cast<int>(j)) ==
                Catch::Approx(straight).margin(1e-12));
      }
  }

  SECTION("random 4x5 matches brute force over both pairings") {
    FeatureSet fsa, fsb;
    fsa.width = fsa.height = fsb.width = fsb.height = 200;
    std::uniform_real_distribution<double> u(10.0, 190.0);
    auto add_lines = [&](FeatureSet& fs, int count) {
      for (int i = 0; i < count; ++i) {
        LineSegment l;
        do {
          l.x1 = u(rng); l.y1 = u(rng); l.x2 = u(rng); l.y2 = u(rng);
        } while (l.length() < 15.0);
        l.score = 0.5;
        l.desc1 = {1, 0};
        l.desc2 = {0, 1};
        fs.lines.push_back(l);
      }
    };
    add_lines(fsa, 4);
    add_lines(fsb, 5);
    Wireframe wa = build_wireframe(fsa, {3.0}), wb = build_wireframe(fsb, {3.0});
    Tensor fa = random_tensor(static_cast<int>(wa.nodes.size()), 5, rng);
    Tensor fb = random_tensor(static_cast<int>(wb.nodes.size()), 5, rng);

    ParamStore s;
    s.tensors["dustbin.line"] = Tensor::scalar(0.1);
    Tape t;
    Bound p(t, s);
    auto sm = line_score_matrix(p, t.leaf(fa), t.leaf(fb), wa, wb);

    auto dot_rows = [&](const Tensor& x, int i, const Tensor& y, int j) {
      double d = 0.0;
      for (int c = 0; c < x.cols(); ++c) d += x.at(i, c) * y.at(j, c);
      return d;
    };
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 5; ++j) {
        const auto& ea = wa.edges[i];
        const auto& eb = wb.edges[j];
        const double straight = dot_rows(fa, ea.node_i, fb, eb.node_i) + dot_rows(fa, ea.node_j, fb, eb.node_j);
        const double crossed = dot_rows(fa, ea.node_i, fb, eb.node_j) + dot_rows(fa, ea.node_j, fb, eb.node_i);
        REQUIRE(t.val(sm.body).at(i, j) == Catch::Approx(std::max(straight, crossed)).margin(1e-12));
      }
  }
}

TEST_CASE("extract matches") {
  std::mt19937_64 rng(313);

  SECTION("near-identity matrix matches the diagonal") {
    Tensor final = Tensor::full(4, 4, 0.01);
    for (int i = 0; i < 3; ++i) final.at(i, i) = 0.9;
    MatchSet m = extract_matches(final, 0.2);
    REQUIRE(m.matches.size() == 3);
    for (int i = 0; i < 3; ++i) {
      REQUIRE(m.matches[i].a == i);
      REQUIRE(m.matches[i].b == i);
    }
  }

  SECTION("everything below the threshold is unmatched") {
    Tensor final = Tensor::full(3, 3, 0.05);
    MatchSet m = extract_matches(final, 0.2);
    REQUIRE(m.matches.empty());
    REQUIRE(m.unmatched_a.size() == 2);
    REQUIRE(m.unmatched_b.size() == 2);
  }

  SECTION("random matrices match a brute-force mutual argmax scan") {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
      Tensor final = Tensor::zeros(7, 7);
      for (double& v : final.data) v = u(rng);
      MatchSet m = extract_matches(final, 0.2);

      std::set<std::pair<int, int>> got;
      for (const auto& e : m.matches) got.insert({e.a, e.b});
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) {
          bool mutual = final.at(i, j) >= 0.2;
          for (int jj = 0; jj < 6 && mutual; ++jj)
            if (final.at(i, jj) > final.at(i, j) || (final.at(i, jj) == final.at(i, j) && jj < j)) mutual = false;
          for (int ii = 0; ii < 6 && mutual; ++ii)
            if (final.at(ii, j) > final.at(i, j) || (final.at(ii, j) == final.at(i, j) && ii < i)) mutual = false;
          REQUIRE(got.count({i, j}) == (mutual ? 1u : 0u));
        }

      // partial injection: no index twice
      std::set<int> as, bs;
      for (const auto& e : m.matches) {
        REQUIRE(as.insert(e.a).second);
        REQUIRE(bs.insert(e.b).second);
      }
    }
  }
}

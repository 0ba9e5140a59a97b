#pragma once

#include <algorithm>
#include <array>
#include <cmath>

#include "wfmatch/geometry.hpp"
#include "wfmatch/tensor.hpp"

namespace wfm {

struct Svd3 {
  Mat3 u;
  Vec3 s;  // descending, non-negative
  Mat3 v;
};

namespace detail {

inline Vec3 col(const Mat3& m, int c) { return {m(0, c), m(1, c), m(2, c)}; }
inline void set_col(Mat3& m, int c, Vec3 v) {
  m(0, c) = v.x;
  m(1, c) = v.y;
  m(2, c) = v.z;
}

// Any unit vector orthogonal to u.
inline Vec3 any_orthogonal(Vec3 u) {
  Vec3 c = cross(u, Vec3{1, 0, 0});
  if (norm(c) < 1e-8) c = cross(u, Vec3{0, 1, 0});
  return normalized(c);
}

}  // namespace detail

// SVD of a 3x3 matrix by one-sided Jacobi (Hestenes) rotations: orthogonalize
// the columns of m while accumulating V; column norms are the singular values.
// Handles rank-deficient input by completing U to an orthonormal basis; signs
// of the completed columns are unconstrained (callers needing det +1 fix it
// themselves).
inline Svd3 svd3(const Mat3& m) {
  Mat3 w = m;
  Mat3 v = Mat3::identity();

  for (int sweep = 0; sweep < 60; ++sweep) {
    bool rotated = false;
    static const int pairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
    for (const auto& pr : pairs) {
      const int p = pr[0], q = pr[1];
      double alpha = 0.0, beta = 0.0, gamma = 0.0;
      for (int i = 0; i < 3; ++i) {
        alpha += w(i, p) * w(i, p);
        beta += w(i, q) * w(i, q);
        gamma += w(i, p) * w(i, q);
      }
      if (std::abs(gamma) <= 1e-32 || std::abs(gamma) <= 1e-16 * std::sqrt(alpha * beta)) continue;
      rotated = true;
      const double zeta = (beta - alpha) / (2.0 * gamma);
      const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
      const double c = 1.0 / std::sqrt(1.0 + t * t);
      const double s = c * t;
      for (int i = 0; i < 3; ++i) {
        const double wp = w(i, p), wq = w(i, q);
        w(i, p) = c * wp - s * wq;
        w(i, q) = s * wp + c * wq;
        const double vp = v(i, p), vq = v(i, q);
        v(i, p) = c * vp - s * vq;
        v(i, q) = s * vp + c * vq;
      }
    }
    if (!rotated) break;
  }

  Vec3 s{norm(detail::col(w, 0)), norm(detail::col(w, 1)), norm(detail::col(w, 2))};
  std::array<int, 3> order = {0, 1, 2};
  std::sort(order.begin(), order.end(), [&](int a, int b) { return s[a] > s[b]; });

  Svd3 out;
  for (int k = 0; k < 3; ++k) {
    out.s[k] = s[order[k]];
    detail::set_col(out.v, k, detail::col(v, order[k]));
    detail::set_col(out.u, k, detail::col(w, order[k]));
  }

  const double tol = 1e-14 * std::max(out.s.x, 1e-300);
  int rank = 3;
  for (int k = 0; k < 3; ++k) {
    if (out.s[k] > tol) {
      detail::set_col(out.u, k, (1.0 / out.s[k]) * detail::col(out.u, k));
    } else {
      rank = std::min(rank, k);
    }
  }
  if (rank == 0) {
    out.u = Mat3::identity();
  } else if (rank == 1) {
    const Vec3 u0 = detail::col(out.u, 0);
    const Vec3 u1 = detail::any_orthogonal(u0);
    detail::set_col(out.u, 1, u1);
    detail::set_col(out.u, 2, cross(u0, u1));
  } else if (rank == 2) {
    detail::set_col(out.u, 2, cross(detail::col(out.u, 0), detail::col(out.u, 1)));
  }
  return out;
}

// Tensor carrier for the same factorization.
inline std::array<Tensor, 3> svd3(const Tensor& m) {
  require_shape(m.rows() == 3 && m.cols() == 3, "svd3: need 3x3, got " + shape_str(m));
  Mat3 a;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a(i, j) = m.at(i, j);
  const Svd3 f = svd3(a);
  Tensor u = Tensor::zeros(3, 3), s = Tensor::zeros(3, 1), v = Tensor::zeros(3, 3);
  for (int i = 0; i < 3; ++i) {
    s.data[i] = f.s[i];
    for (int j = 0; j < 3; ++j) {
      u.at(i, j) = f.u(i, j);
      v.at(i, j) = f.v(i, j);
    }
  }
  return {u, s, v};
}

}  // namespace wfm

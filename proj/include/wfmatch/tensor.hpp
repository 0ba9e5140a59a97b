#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace wfm {

// Dense row-major tensor of doubles. Everything in the pipeline is rank 1 or 2;
// scalars are 1x1.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::vector<int> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
    assert(static_cast<std::size_t>(numel()) == data.size());
  }

  static Tensor zeros(int r, int c) { return Tensor{{r, c}, std::vector<double>(std::size_t(r) * c, 0.0)}; }
  static Tensor full(int r, int c, double v) { return Tensor{{r, c}, std::vector<double>(std::size_t(r) * c, v)}; }
  static Tensor scalar(double v) { return Tensor{{1, 1}, {v}}; }
  static Tensor row(std::vector<double> v) {
    const int n = static_cast<int>(v.size());
    return Tensor{{1, n}, std::move(v)};
  }

  int64_t numel() const {
    int64_t n = 1;
    for (int s : shape) n *= s;
    return shape.empty() ? 0 : n;
  }
  int rows() const { return shape.empty() ? 0 : shape[0]; }
  int cols() const { return shape.size() < 2 ? 1 : shape[1]; }

  double& at(int i, int j) { return data[std::size_t(i) * cols() + j]; }
  double at(int i, int j) const { return data[std::size_t(i) * cols() + j]; }
  double* row_ptr(int i) { return data.data() + std::size_t(i) * cols(); }
  const double* row_ptr(int i) const { return data.data() + std::size_t(i) * cols(); }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

inline std::string shape_str(const Tensor& t) {
  std::string s = "[";
  for (std::size_t i = 0; i < t.shape.size(); ++i) s += (i ? "x" : "") + std::to_string(t.shape[i]);
  return s + "]";
}

struct ShapeError : std::runtime_error {
  explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require_shape(bool ok, const std::string& msg) {
  if (!ok) throw ShapeError(msg);
}

// C = A * B
inline Tensor mm_nn(const Tensor& a, const Tensor& b) {
  require_shape(a.cols() == b.rows(), "matmul: " + shape_str(a) + " * " + shape_str(b));
  const int m = a.rows(), k = a.cols(), n = b.cols();
  Tensor c = Tensor::zeros(m, n);
  for (int i = 0; i < m; ++i) {
    const double* ai = a.row_ptr(i);
    double* ci = c.row_ptr(i);
    for (int p = 0; p < k; ++p) {
      const double aip = ai[p];
      const double* bp = b.row_ptr(p);
      for (int j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
  return c;
}

// C = A * B^T
inline Tensor mm_nt(const Tensor& a, const Tensor& b) {
  require_shape(a.cols() == b.cols(), "matmul_nt: " + shape_str(a) + " * " + shape_str(b) + "^T");
  const int m = a.rows(), k = a.cols(), n = b.rows();
  Tensor c = Tensor::zeros(m, n);
  for (int i = 0; i < m; ++i) {
    const double* ai = a.row_ptr(i);
    double* ci = c.row_ptr(i);
    for (int j = 0; j < n; ++j) {
      const double* bj = b.row_ptr(j);
      double s = 0.0;
      for (int p = 0; p < k; ++p) s += ai[p] * bj[p];
      ci[j] = s;
    }
  }
  return c;
}

// C = A^T * B
inline Tensor mm_tn(const Tensor& a, const Tensor& b) {
  require_shape(a.rows() == b.rows(), "matmul_tn: " + shape_str(a) + "^T * " + shape_str(b));
  const int m = a.cols(), k = a.rows(), n = b.cols();
  Tensor c = Tensor::zeros(m, n);
  for (int p = 0; p < k; ++p) {
    const double* ap = a.row_ptr(p);
    const double* bp = b.row_ptr(p);
    for (int i = 0; i < m; ++i) {
      const double api = ap[i];
      double* ci = c.row_ptr(i);
      for (int j = 0; j < n; ++j) ci[j] += api * bp[j];
    }
  }
  return c;
}

inline Tensor transposed(const Tensor& a) {
  Tensor t = Tensor::zeros(a.cols(), a.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) t.at(j, i) = a.at(i, j);
  return t;
}

// splitmix64; used to derive independent rng streams from (seed, index).
inline uint64_t mix_seed(uint64_t seed, uint64_t index) {
  uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace wfm

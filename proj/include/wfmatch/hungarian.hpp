#pragma once

#include <limits>
#include <vector>

#include "wfmatch/tensor.hpp"

namespace wfm {

constexpr double kForbidden = std::numeric_limits<double>::infinity();

struct Assignment {
  std::vector<std::pair<int, int>> pairs;  // (row, col), row- unique and col-unique
  double cost = 0.0;
};

namespace detail {

// Potentials + shortest augmenting path Hungarian for a square matrix.
// Returns col assignment per row.
inline std::vector<int> hungarian_square(const std::vector<std::vector<double>>& a) {
  const int n = static_cast<int>(a.size());
  const double inf = std::numeric_limits<double>::max();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = a[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] > 0) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

}  // namespace detail

// Minimum-cost one-to-one partial assignment of an MxN cost matrix. Infinite
// entries are forbidden and leaving a row or column unassigned is free, so
// only pairs that lower the total cost are taken. Solved as a perfect
// matching on an (M+N)-square matrix where each row and column owns a
// zero-cost dummy partner.
inline Assignment hungarian(const std::vector<std::vector<double>>& cost) {
  const int m = static_cast<int>(cost.size());
  const int n = m > 0 ? static_cast<int>(cost[0].size()) : 0;
  Assignment out;
  if (m == 0 || n == 0) return out;

  double big = 1.0;
  for (const auto& row : cost)
    for (double c : row)
      if (std::isfinite(c)) big += std::abs(c);

  const int s = m + n;
  std::vector<std::vector<double>> sq(s, std::vector<double>(s, big));
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      if (std::isfinite(cost[i][j])) sq[i][j] = cost[i][j];
  for (int i = 0; i < m; ++i) sq[i][n + i] = 0.0;       // row i unassigned
  for (int j = 0; j < n; ++j) sq[m + j][j] = 0.0;       // col j unassigned
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < m; ++i) sq[m + j][n + i] = 0.0;  // dummy-dummy

  const std::vector<int> row_to_col = detail::hungarian_square(sq);
  for (int i = 0; i < m; ++i) {
    const int j = row_to_col[i];
    if (j < n && std::isfinite(cost[i][j])) {
      out.pairs.emplace_back(i, j);
      out.cost += cost[i][j];
    }
  }
  return out;
}

inline Assignment hungarian(const Tensor& cost) {
  std::vector<std::vector<double>> c(cost.rows(), std::vector<double>(cost.cols()));
  for (int i = 0; i < cost.rows(); ++i)
    for (int j = 0; j < cost.cols(); ++j) c[i][j] = cost.at(i, j);
  return hungarian(c);
}

}  // namespace wfm

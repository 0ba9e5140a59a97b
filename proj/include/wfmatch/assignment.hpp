#pragma once

#include <vector>

#include "wfmatch/gnn.hpp"
#include "wfmatch/tape.hpp"
#include "wfmatch/wireframe.hpp"

namespace wfm {

// Body scores plus the learnable dustbin threshold; augmented is the
// (M+1)x(N+1) view with the last row/column filled by the dustbin.
struct ScoreMatrix {
  Tape::VarId body;
  Tape::VarId dustbin;
  Tape::VarId augmented;
};

inline ScoreMatrix make_score_matrix(Tape& t, Tape::VarId body, Tape::VarId dustbin) {
  return {body, dustbin, t.augment_dustbin(body, dustbin)};
}

// S^p_ij = <f^A_i, f^B_j>
inline ScoreMatrix point_score_matrix(Bound& p, Tape::VarId f_a, Tape::VarId f_b) {
  Tape& t = p.tape();
  return make_score_matrix(t, t.matmul_nt(f_a, f_b), p["dustbin.point"]);
}

// S^l_ij: endpoint-order-agnostic line similarity, the max over the two
// endpoint pairings.
inline ScoreMatrix line_score_matrix(Bound& p, Tape::VarId f_a, Tape::VarId f_b, const Wireframe& wa,
                                     const Wireframe& wb) {
  Tape& t = p.tape();
  auto endpoint_rows = [](const Wireframe& w, bool first) {
    std::vector<int> idx;
    idx.reserve(w.edges.size());
    for (const auto& e : w.edges) idx.push_back(first ? e.node_i : e.node_j);
    return idx;
  };
  const Tape::VarId fs_a = t.gather_rows(f_a, endpoint_rows(wa, true));
  const Tape::VarId fe_a = t.gather_rows(f_a, endpoint_rows(wa, false));
  const Tape::VarId fs_b = t.gather_rows(f_b, endpoint_rows(wb, true));
  const Tape::VarId fe_b = t.gather_rows(f_b, endpoint_rows(wb, false));

  const Tape::VarId straight = t.add(t.matmul_nt(fs_a, fs_b), t.matmul_nt(fe_a, fe_b));
  const Tape::VarId crossed = t.add(t.matmul_nt(fs_a, fe_b), t.matmul_nt(fe_a, fs_b));
  return make_score_matrix(t, t.elem_max(straight, crossed), p["dustbin.line"]);
}

// Geometric mean of the row-wise and column-wise softmax of the augmented
// matrix; returns the full (M+1)x(N+1) assignment matrix.
inline Tape::VarId dual_softmax(Tape& t, const ScoreMatrix& s) {
  return t.sqrt_el(t.mul(t.row_softmax(s.augmented), t.col_softmax(s.augmented)));
}

struct MatchSet {
  std::vector<MatchEntry> matches;       // mutual nearest neighbors above eta
  std::vector<int> unmatched_a, unmatched_b;
};

// Mutual row/column argmax over the body of the final assignment matrix
// (dustbins excluded from the argmax), kept above the confidence threshold.
// Ties break towards the lowest index.
inline MatchSet extract_matches(const Tensor& final_full, double eta) {
  const int m = final_full.rows() - 1, n = final_full.cols() - 1;
  MatchSet out;
  std::vector<int> best_col(std::max(m, 0), -1), best_row(std::max(n, 0), -1);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      if (best_col[i] < 0 || final_full.at(i, j) > final_full.at(i, best_col[i])) best_col[i] = j;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < m; ++i)
      if (best_row[j] < 0 || final_full.at(i, j) > final_full.at(best_row[j], j)) best_row[j] = i;

  std::vector<bool> a_matched(std::max(m, 0), false), b_matched(std::max(n, 0), false);
  for (int i = 0; i < m; ++i) {
    const int j = best_col[i];
    if (j >= 0 && best_row[j] == i && final_full.at(i, j) >= eta) {
      out.matches.push_back({i, j, final_full.at(i, j)});
      a_matched[i] = true;
      b_matched[j] = true;
    }
  }
  for (int i = 0; i < m; ++i)
    if (!a_matched[i]) out.unmatched_a.push_back(i);
  for (int j = 0; j < n; ++j)
    if (!b_matched[j]) out.unmatched_b.push_back(j);
  return out;
}

}  // namespace wfm

#pragma once

#include <ostream>

#include "wfmatch/assignment.hpp"
#include "wfmatch/eval.hpp"
#include "wfmatch/gnn.hpp"
#include "wfmatch/synth.hpp"

namespace wfm {

// Negative log-likelihood of one final assignment matrix under the labels:
// matched entries, plus the dustbin column for unmatched A and the dustbin
// row for unmatched B. IGNORE features contribute nothing. When normalize is
// set the sum is divided by the term count (the raw form is the fidelity
// reference).
inline Tape::VarId nll_terms(Tape& t, Tape::VarId final_full, const std::vector<std::pair<int, int>>& matches,
                             const std::vector<int>& unmatched_a, const std::vector<int>& unmatched_b,
                             bool normalize) {
  const int m = t.val(final_full).rows() - 1;
  const int n = t.val(final_full).cols() - 1;
  std::vector<std::pair<int, int>> idx;
  for (const auto& [i, j] : matches) {
    require_shape(i >= 0 && i < m && j >= 0 && j < n, "nll: match index out of range");
    idx.emplace_back(i, j);
  }
  for (int i : unmatched_a) {
    require_shape(i >= 0 && i < m, "nll: unmatched_a index out of range");
    idx.emplace_back(i, n);
  }
  for (int j : unmatched_b) {
    require_shape(j >= 0 && j < n, "nll: unmatched_b index out of range");
    idx.emplace_back(m, j);
  }
  if (idx.empty()) return t.leaf(Tensor::scalar(0.0));
  const double denom = normalize ? double(idx.size()) : 1.0;
  return t.scale(t.sum_all(t.log_el(t.gather_entries(final_full, std::move(idx)))), -1.0 / denom);
}

inline Tape::VarId nll_loss(Tape& t, Tape::VarId final_points, Tape::VarId final_lines, const GtLabels& labels,
                            bool normalize = true) {
  const Tape::VarId lp =
      nll_terms(t, final_points, labels.point_matches, labels.point_unmatched_a, labels.point_unmatched_b, normalize);
  const Tape::VarId ll =
      nll_terms(t, final_lines, labels.line_matches, labels.line_unmatched_a, labels.line_unmatched_b, normalize);
  return t.scale(t.add(lp, ll), 0.5);
}

// ---- training ----

struct TrainConfig {
  GnnConfig gnn{.dim = 32, .blocks = 3, .heads = 4, .desc_dim = 16};
  WireframeConfig wireframe;
  GtConfig gt;
  SynthConfig scene;
  std::string mode = "overfit";  // "overfit": fixed pair set; "curriculum": fresh pair per step
  int iterations = 4000;
  int pairs = 50;
  double difficulty = 0.15;  // fixed (overfit) or ramp target (curriculum)
  double lr = 1e-4;
  uint64_t seed = 0;
  int eval_every = 500;
  int checkpoint_every = 0;  // 0: only the final checkpoint
  bool normalize_loss = true;
  double eta = 0.2;
  std::string out_dir;  // checkpoints + diagnostics; empty = no files

  void validate() const {
    require_shape(iterations > 0 && pairs > 0 && lr >= 0.0, "train config: non-positive budget");
    require_shape(mode == "overfit" || mode == "curriculum", "train config: unknown mode '" + mode + "'");
    require_shape(difficulty >= 0.0 && difficulty <= 1.0, "train config: difficulty out of range");
  }
};

// A pair with everything the optimizer needs precomputed.
struct PreparedPair {
  SyntheticPair src;
  Wireframe wa, wb;
  GtLabels labels;  // node-level point labels + line labels
};

inline PreparedPair prepare_pair(SyntheticPair pair, const WireframeConfig& wcfg, const GtConfig& gcfg) {
  PreparedPair p;
  p.wa = build_wireframe(pair.a, wcfg);
  p.wb = build_wireframe(pair.b, wcfg);
  p.labels = make_gt_labels(node_positions(p.wa), node_positions(p.wb), pair.a, pair.b, pair.geom, gcfg);
  p.src = std::move(pair);
  return p;
}

struct PairScores {
  Tape::VarId final_points, final_lines;
  GnnOutput gnn;
};

inline PairScores score_pair(Bound& p, const PreparedPair& pair, const GnnConfig& cfg) {
  Tape& t = p.tape();
  PairScores s;
  s.gnn = gnn_forward(p, pair.wa, pair.wb, cfg);
  s.final_points = dual_softmax(t, point_score_matrix(p, s.gnn.f_a, s.gnn.f_b));
  s.final_lines = dual_softmax(t, line_score_matrix(p, s.gnn.f_a, s.gnn.f_b, pair.wa, pair.wb));
  return s;
}

struct PairMetrics {
  PrecisionRecall points, lines;
};

inline PairMetrics evaluate_pair(const ParamStore& params, const PreparedPair& pair, const GnnConfig& cfg,
                                 double eta) {
  Tape t;
  Bound p(t, params);
  const PairScores s = score_pair(p, pair, cfg);
  const MatchSet mp = extract_matches(t.val(s.final_points), eta);
  const MatchSet ml = extract_matches(t.val(s.final_lines), eta);

  PairMetrics m;
  const auto [ig_a, ig_b] = point_ignore_sets(pair.labels, mp.matches);
  m.points = match_precision_recall(mp.matches, pair.labels.point_matches, ig_a, ig_b);
  m.lines = match_precision_recall(ml.matches, pair.labels.line_matches,
                                   {pair.labels.line_ignore_a.begin(), pair.labels.line_ignore_a.end()},
                                   {pair.labels.line_ignore_b.begin(), pair.labels.line_ignore_b.end()});
  return m;
}

struct TrainResult {
  ParamStore params;
  std::vector<double> loss_trace;
  PairMetrics final_metrics;  // aggregated over the training set (overfit mode)
};

// Adam over synthetic pairs, one pair per step. Deterministic given the
// config: pair generation, initialization and the update sequence all derive
// from cfg.seed.
inline TrainResult train(const TrainConfig& cfg, std::ostream* log = nullptr) {
  cfg.validate();
  TrainResult result;
  result.params = init_gnn_params(cfg.gnn, cfg.seed);
  Adam opt(AdamConfig{.lr = cfg.lr});

  std::vector<PreparedPair> dataset;
  if (cfg.mode == "overfit") {
    for (int i = 0; i < cfg.pairs; ++i)
      dataset.push_back(prepare_pair(generate_synthetic_pair(cfg.scene, cfg.difficulty, mix_seed(cfg.seed, 1000 + i)),
                                     cfg.wireframe, cfg.gt));
  }

  auto aggregate = [&](const std::vector<PreparedPair>& pairs) {
    PairMetrics total;
    for (const auto& pr : pairs) {
      const PairMetrics m = evaluate_pair(result.params, pr, cfg.gnn, cfg.eta);
      total.points.correct += m.points.correct;
      total.points.predicted += m.points.predicted;
      total.points.gt += m.points.gt;
      total.lines.correct += m.lines.correct;
      total.lines.predicted += m.lines.predicted;
      total.lines.gt += m.lines.gt;
    }
    return total;
  };

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    double difficulty = cfg.difficulty;
    const PreparedPair* pair = nullptr;
    PreparedPair fresh;
    if (cfg.mode == "overfit") {
      pair = &dataset[iter % dataset.size()];
    } else {
      const double ramp = std::min(1.0, double(iter) / std::max(1.0, cfg.iterations / 2.0));
      difficulty = cfg.difficulty * ramp;
      fresh = prepare_pair(generate_synthetic_pair(cfg.scene, difficulty, mix_seed(cfg.seed, 70000 + iter)),
                           cfg.wireframe, cfg.gt);
      pair = &fresh;
    }

    Tape t;
    Bound p(t, result.params);
    const PairScores s = score_pair(p, *pair, cfg.gnn);
    const Tape::VarId loss = nll_loss(t, s.final_points, s.final_lines, pair->labels, cfg.normalize_loss);
    const double loss_v = t.val(loss).data[0];
    if (!std::isfinite(loss_v)) {
      if (!cfg.out_dir.empty()) {
        save_json_file(cfg.out_dir + "/diagnostic_pair.json",
                       json{{"iter", iter},
                            {"difficulty", difficulty},
                            {"a", to_json(pair->src.a)},
                            {"b", to_json(pair->src.b)},
                            {"geometry", to_json(pair->src.geom)}});
      }
      throw Error("non_finite_loss", "loss diverged at iteration " + std::to_string(iter));
    }
    result.loss_trace.push_back(loss_v);

    t.backward(loss);
    opt.step(result.params, p.grads());

    const bool last = iter + 1 == cfg.iterations;
    if (log && (last || (cfg.eval_every > 0 && (iter + 1) % cfg.eval_every == 0))) {
      PairMetrics m = cfg.mode == "overfit" ? aggregate(dataset) : evaluate_pair(result.params, *pair, cfg.gnn, cfg.eta);
      (*log) << json{{"iter", iter + 1},
                     {"loss", loss_v},
                     {"point_precision", m.points.precision()},
                     {"point_recall", m.points.recall()},
                     {"line_precision", m.lines.precision()},
                     {"line_recall", m.lines.recall()},
                     {"difficulty", difficulty}}
                    .dump()
             << "\n";
    }
    if (!cfg.out_dir.empty() && cfg.checkpoint_every > 0 && (iter + 1) % cfg.checkpoint_every == 0 && !last)
      save_json_file(cfg.out_dir + "/checkpoint_" + std::to_string(iter + 1) + ".json", params_to_json(result.params));
  }

  if (cfg.mode == "overfit") result.final_metrics = aggregate(dataset);
  if (!cfg.out_dir.empty()) save_json_file(cfg.out_dir + "/checkpoint.json", params_to_json(result.params));
  return result;
}

}  // namespace wfm

#include <cstdio>

#include "wfmatch/training.hpp"

using namespace wfm;

int main() {
  const GnnConfig cfg{.dim = 8, .blocks = 1, .heads = 2, .desc_dim = 4};
  SynthConfig scene;
  scene.width = 64;
  scene.height = 48;
  scene.n_keypoints = 2;
  scene.n_lines = 2;
  scene.desc_dim = 4;
  scene.min_line_len = 12.0;
  scene.max_line_len = 24.0;
  scene.margin = 10.0;
  const SyntheticPair pair = generate_synthetic_pair(scene, 0.2, uint64_t(99));
  const PreparedPair prep = prepare_pair(pair, WireframeConfig{3.0}, GtConfig{});
  std::printf("nodes a=%zu b=%zu edges a=%zu b=%zu\n", prep.wa.nodes.size(), prep.wb.nodes.size(),
              prep.wa.edges.size(), prep.wb.edges.size());
  std::printf("labels: pm=%zu ua=%zu ub=%zu lm=%zu lua=%zu lub=%zu iga=%zu\n", prep.labels.point_matches.size(),
              prep.labels.point_unmatched_a.size(), prep.labels.point_unmatched_b.size(),
              prep.labels.line_matches.size(), prep.labels.line_unmatched_a.size(),
              prep.labels.line_unmatched_b.size(), prep.labels.line_ignore_a.size());

  ParamStore params = init_gnn_params(cfg, 42);
  auto objective = [&](const ParamStore& p) {
    Tape t;
    Bound b(t, p);
    const PairScores s = score_pair(b, prep, cfg);
    return t.val(nll_loss(t, s.final_points, s.final_lines, prep.labels, true)).data[0];
  };

  Tape t;
  Bound b(t, params);
  const PairScores s = score_pair(b, prep, cfg);
  const auto loss = nll_loss(t, s.final_points, s.final_lines, prep.labels, true);
  t.backward(loss);
  auto grads = b.grads();

  for (const auto& [name, g] : grads) {
    std::map<std::string, Tensor> single{{name, g}};
    const double err = grad_check(objective, params, single, 1e-5);
    if (err > 1e-5) std::printf("%-28s err=%.3e\n", name.c_str(), err);
  }
  return 0;
}

#pragma once

#include <string>
#include <vector>

#include "wfmatch/nn.hpp"
#include "wfmatch/tape.hpp"
#include "wfmatch/wireframe.hpp"

namespace wfm {

struct GnnConfig {
  int dim = 256;       // feature width D
  int blocks = 9;      // L iterations of [self, line, cross]
  int heads = 4;
  int desc_dim = 256;  // width of the ingested visual descriptors
  bool lmp = true;     // line message passing on/off (ablation switch)

  void validate() const {
    require_shape(dim > 0 && blocks >= 1 && heads > 0 && desc_dim > 0, "gnn config: non-positive size");
    require_shape(dim % heads == 0, "gnn config: dim must be divisible by heads");
  }
};

// One incidence per (node, incident line) pair; a degree-3 node owns three.
struct Incidences {
  std::vector<int> anchor, other, edge;
  std::vector<int> row_at_i, row_at_j;  // incidence row anchored at edge.node_i / node_j

  int count() const { return static_cast<int>(anchor.size()); }
};

inline Incidences build_incidences(const Wireframe& w) {
  Incidences inc;
  inc.row_at_i.assign(w.edges.size(), -1);
  inc.row_at_j.assign(w.edges.size(), -1);
  for (int v = 0; v < static_cast<int>(w.nodes.size()); ++v) {
    for (const auto& [nbr, e] : w.adjacency[v]) {
      const int row = inc.count();
      inc.anchor.push_back(v);
      inc.other.push_back(nbr);
      inc.edge.push_back(e);
      if (w.edges[e].node_i == v)
        inc.row_at_i[e] = row;
      else
        inc.row_at_j[e] = row;
    }
  }
  return inc;
}

// ---- parameter construction ----

inline ParamStore init_gnn_params(const GnnConfig& cfg, uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(mix_seed(seed, 0xA11));
  ParamStore s;
  const int D = cfg.dim;
  add_linear(s, "input_proj", cfg.desc_dim, D, rng);
  add_mlp(s, "pe_point", {3, D, D, D}, rng);
  add_mlp(s, "pe_edge", {5, D, D, D}, rng);
  for (int b = 0; b < cfg.blocks; ++b) {
    const std::string pre = "block" + std::to_string(b);
    for (const char* kind : {".self", ".cross"}) {
      add_linear(s, pre + kind + ".q", D, D, rng);
      // a key bias shifts every score in a row equally; softmax cancels it,
      // so the parameter would be dead weight
      add_linear(s, pre + kind + ".k", D, D, rng, /*bias=*/false);
      add_linear(s, pre + kind + ".v", D, D, rng);
      add_linear(s, pre + kind + ".o", D, D, rng);
      add_mlp(s, pre + kind + ".psi", {2 * D, D, D, D}, rng);
    }
    add_mlp(s, pre + ".lmp.phi", {3 * D, D, D, D}, rng);
  }
  add_linear(s, "final_proj", D, D, rng);
  s.tensors["dustbin.point"] = Tensor::scalar(1.0);
  s.tensors["dustbin.line"] = Tensor::scalar(1.0);
  s.tensors["meta.config"] = Tensor::row({double(cfg.dim), double(cfg.blocks), double(cfg.heads), double(cfg.desc_dim)});
  return s;
}

// meta.config is bookkeeping, not a learnable tensor
inline bool is_meta_param(const std::string& name) { return name.rfind("meta.", 0) == 0; }

inline GnnConfig config_from_params(const ParamStore& s) {
  const Tensor& m = s.at("meta.config");
  require_shape(m.numel() == 4, "meta.config: expected 4 entries");
  GnnConfig cfg;
  cfg.dim = static_cast<int>(m.data[0]);
  cfg.blocks = static_cast<int>(m.data[1]);
  cfg.heads = static_cast<int>(m.data[2]);
  cfg.desc_dim = static_cast<int>(m.data[3]);
  return cfg;
}

// ---- encoder inputs (plain tensors; coordinates normalized to [-1,1] by the
// image half-extent so the encoders are image-size agnostic) ----

inline Tensor node_position_inputs(const Wireframe& w) {
  const double hx = w.image_width / 2.0, hy = w.image_height / 2.0;
  Tensor t = Tensor::zeros(static_cast<int>(w.nodes.size()), 3);
  for (std::size_t i = 0; i < w.nodes.size(); ++i) {
    t.at(static_cast<int>(i), 0) = (w.nodes[i].x - hx) / hx;
    t.at(static_cast<int>(i), 1) = (w.nodes[i].y - hy) / hy;
    t.at(static_cast<int>(i), 2) = w.nodes[i].score;
  }
  return t;
}

inline Tensor incidence_inputs(const Wireframe& w, const Incidences& inc) {
  const double hx = w.image_width / 2.0, hy = w.image_height / 2.0;
  Tensor t = Tensor::zeros(inc.count(), 5);
  for (int r = 0; r < inc.count(); ++r) {
    const auto& a = w.nodes[inc.anchor[r]];
    const auto& o = w.nodes[inc.other[r]];
    t.at(r, 0) = (a.x - hx) / hx;
    t.at(r, 1) = (a.y - hy) / hy;
    t.at(r, 2) = (o.x - a.x) / hx;
    t.at(r, 3) = (o.y - a.y) / hy;
    t.at(r, 4) = w.edges[inc.edge[r]].score;
  }
  return t;
}

inline Tensor node_descriptors(const Wireframe& w) {
  const int dim = w.nodes.empty() ? 0 : static_cast<int>(w.nodes[0].desc.size());
  Tensor t = Tensor::zeros(static_cast<int>(w.nodes.size()), dim);
  for (std::size_t i = 0; i < w.nodes.size(); ++i)
    std::copy(w.nodes[i].desc.begin(), w.nodes[i].desc.end(), t.row_ptr(static_cast<int>(i)));
  return t;
}

struct PositionalEncoding {
  Tape::VarId d_point;  // N x D
  Tape::VarId d_edge;   // incidences x D
  Incidences inc;
};

inline PositionalEncoding encode_positions(Bound& p, const Wireframe& w) {
  require_shape(!w.nodes.empty(), "encode_positions: empty wireframe");
  Tape& t = p.tape();
  PositionalEncoding pe;
  pe.inc = build_incidences(w);
  pe.d_point = mlp_forward(p, "pe_point", t.leaf(node_position_inputs(w)));
  pe.d_edge = pe.inc.count() > 0 ? mlp_forward(p, "pe_edge", t.leaf(incidence_inputs(w, pe.inc)))
                                 : t.leaf(Tensor::zeros(0, 0));
  return pe;
}

// ---- layers ----

enum class AttnKind { Self, Cross };

// Multi-head attention: queries from x_src, keys/values from x_tgt, per-head
// scaling 1/sqrt(D/heads). An empty target contributes a zero message.
inline Tape::VarId multi_head_attention(Bound& p, const std::string& prefix, Tape::VarId x_src,
                                        Tape::VarId x_tgt, int heads) {
  Tape& t = p.tape();
  const int D = t.val(x_src).cols();
  if (t.val(x_tgt).rows() == 0) return t.leaf(Tensor::zeros(t.val(x_src).rows(), D));
  const int dh = D / heads;
  const double inv_scale = 1.0 / std::sqrt(double(dh));

  const Tape::VarId q = linear_forward(p, prefix + ".q", x_src);
  const Tape::VarId k = linear_forward(p, prefix + ".k", x_tgt);
  const Tape::VarId v = linear_forward(p, prefix + ".v", x_tgt);

  std::vector<Tape::VarId> ctx;
  for (int h = 0; h < heads; ++h) {
    const int c0 = h * dh, c1 = (h + 1) * dh;
    const Tape::VarId scores = t.scale(t.matmul_nt(t.slice_cols(q, c0, c1), t.slice_cols(k, c0, c1)), inv_scale);
    ctx.push_back(t.matmul(t.row_softmax(scores), t.slice_cols(v, c0, c1)));
  }
  return linear_forward(p, prefix + ".o", t.concat_cols(ctx));
}

// Residual update x_i <- x_i + psi([x_i || a(x_i)]).
inline Tape::VarId attention_update(Bound& p, const std::string& block_prefix, AttnKind kind,
                                    Tape::VarId x_src, Tape::VarId x_tgt, const GnnConfig& cfg) {
  Tape& t = p.tape();
  const std::string prefix = block_prefix + (kind == AttnKind::Self ? ".self" : ".cross");
  const Tape::VarId a = multi_head_attention(p, prefix, x_src, x_tgt, cfg.heads);
  return t.add(x_src, mlp_forward(p, prefix + ".psi", t.concat_cols({x_src, a})));
}

// Residual update averaging phi([x_i || x_j || d^e_j]) over the line-connected
// neighbors j of i, with d^e_j anchored at j and pointing towards i. Isolated
// nodes pass through unchanged.
inline Tape::VarId line_message_passing(Bound& p, const std::string& block_prefix, Tape::VarId x,
                                        const Wireframe& w, const Incidences& inc, Tape::VarId d_edge) {
  Tape& t = p.tape();
  const int n = t.val(x).rows();
  if (inc.count() == 0) return x;

  std::vector<int> tgt, src, de_row;
  for (int i = 0; i < n; ++i) {
    for (const auto& [j, e] : w.adjacency[i]) {
      tgt.push_back(i);
      src.push_back(j);
      de_row.push_back(w.edges[e].node_i == j ? inc.row_at_i[e] : inc.row_at_j[e]);
    }
  }

  const Tape::VarId msg_in = t.concat_cols({t.gather_rows(x, tgt), t.gather_rows(x, src), t.gather_rows(d_edge, de_row)});
  const Tape::VarId msg = mlp_forward(p, block_prefix + ".lmp.phi", msg_in);
  std::vector<double> inv_deg(n, 0.0);
  for (int i = 0; i < n; ++i)
    if (w.degree(i) > 0) inv_deg[i] = 1.0 / w.degree(i);
  return t.add(x, t.row_scale(t.segment_sum_rows(msg, tgt, n), std::move(inv_deg)));
}

// ---- full forward ----

struct GnnOutput {
  Tape::VarId f_a, f_b;  // final per-node matching features
};

// L blocks of [self-attention, line message passing, cross-attention] over
// both wireframes with shared weights, then a final linear projection. Cross
// updates read the pre-update features of both images, so swapping the inputs
// swaps the outputs exactly.
inline GnnOutput gnn_forward(Bound& p, const Wireframe& wa, const Wireframe& wb, const GnnConfig& cfg) {
  cfg.validate();
  require_shape(!wa.nodes.empty() && !wb.nodes.empty(), "gnn_forward: empty wireframe");
  Tape& t = p.tape();

  const PositionalEncoding pa = encode_positions(p, wa);
  const PositionalEncoding pb = encode_positions(p, wb);

  Tape::VarId xa = t.add(pa.d_point, linear_forward(p, "input_proj", t.leaf(node_descriptors(wa))));
  Tape::VarId xb = t.add(pb.d_point, linear_forward(p, "input_proj", t.leaf(node_descriptors(wb))));

  for (int b = 0; b < cfg.blocks; ++b) {
    const std::string pre = "block" + std::to_string(b);
    xa = attention_update(p, pre, AttnKind::Self, xa, xa, cfg);
    xb = attention_update(p, pre, AttnKind::Self, xb, xb, cfg);
    if (cfg.lmp) {
      xa = line_message_passing(p, pre, xa, wa, pa.inc, pa.d_edge);
      xb = line_message_passing(p, pre, xb, wb, pb.inc, pb.d_edge);
    }
    const Tape::VarId xa_new = attention_update(p, pre, AttnKind::Cross, xa, xb, cfg);
    const Tape::VarId xb_new = attention_update(p, pre, AttnKind::Cross, xb, xa, cfg);
    xa = xa_new;
    xb = xb_new;
  }

  return {linear_forward(p, "final_proj", xa), linear_forward(p, "final_proj", xb)};
}

}  // namespace wfm

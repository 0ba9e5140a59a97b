#pragma once

#include <algorithm>
#include <functional>
#include <utility>

#include "wfmatch/tensor.hpp"

namespace wfm {

// Reverse-mode tape over whole-tensor operations. A tape is rebuilt for every
// forward pass and confined to one thread; backward() visits each recorded op
// exactly once, in reverse recording order.
class Tape {
 public:
  using VarId = int;

  VarId leaf(Tensor v) {
    nodes_.push_back(Node{std::move(v), Tensor{}, nullptr});
    return static_cast<VarId>(nodes_.size() - 1);
  }

  const Tensor& val(VarId id) const { return nodes_[id].value; }
  const Tensor& grad(VarId id) const { return nodes_[id].grad; }

  // d(out)/d(each leaf), seeded with 1 at a scalar root.
  void backward(VarId root) {
    require_shape(val(root).numel() == 1, "backward: root must be scalar");
    for (auto& n : nodes_)
      if (n.grad.data.empty()) n.grad = Tensor{n.value.shape, std::vector<double>(n.value.data.size(), 0.0)};
    nodes_[root].grad.data[0] = 1.0;
    for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i)
      if (nodes_[i].backward) nodes_[i].backward();
  }

  std::size_t size() const { return nodes_.size(); }

  // ---- ops ----

  VarId add(VarId a, VarId b) {
    require_shape(val(a).same_shape(val(b)), "add: shape mismatch " + shape_str(val(a)) + " vs " + shape_str(val(b)));
    Tensor out = val(a);
    const Tensor& vb = val(b);
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += vb.data[i];
    return record(std::move(out), [this, a, b](const Tensor& g) {
      axpy(a, 1.0, g.data.data());
      axpy(b, 1.0, g.data.data());
    });
  }

  VarId sub(VarId a, VarId b) { return add(a, scale(b, -1.0)); }

  // matrix + broadcast row vector
  VarId add_row(VarId a, VarId b) {
    require_shape(val(b).rows() == 1 && val(a).cols() == val(b).cols(), "add_row: need 1x" + std::to_string(val(a).cols()));
    Tensor out = val(a);
    const Tensor& vb = val(b);
    for (int i = 0; i < out.rows(); ++i) {
      double* r = out.row_ptr(i);
      for (int j = 0; j < out.cols(); ++j) r[j] += vb.data[j];
    }
    return record(std::move(out), [this, a, b](const Tensor& g) {
      axpy(a, 1.0, g.data.data());
      Tensor& gb = nodes_[b].grad;
      for (int i = 0; i < g.rows(); ++i) {
        const double* r = g.row_ptr(i);
        for (int j = 0; j < g.cols(); ++j) gb.data[j] += r[j];
      }
    });
  }

  VarId scale(VarId a, double c) {
    Tensor out = val(a);
    for (double& v : out.data) v *= c;
    return record(std::move(out), [this, a, c](const Tensor& g) {
      Tensor& ga = nodes_[a].grad;
      for (std::size_t i = 0; i < g.data.size(); ++i) ga.data[i] += c * g.data[i];
    });
  }

  VarId mul(VarId a, VarId b) {
    require_shape(val(a).same_shape(val(b)), "mul: shape mismatch");
    Tensor out = val(a);
    const Tensor& vb = val(b);
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= vb.data[i];
    return record(std::move(out), [this, a, b](const Tensor& g) {
      Tensor& ga = nodes_[a].grad;
      Tensor& gb = nodes_[b].grad;
      const Tensor& va = val(a);
      const Tensor& vb2 = val(b);
      for (std::size_t i = 0; i < g.data.size(); ++i) {
        ga.data[i] += g.data[i] * vb2.data[i];
        gb.data[i] += g.data[i] * va.data[i];
      }
    });
  }

  VarId matmul(VarId a, VarId b) {
    Tensor out = mm_nn(val(a), val(b));
    return record(std::move(out), [this, a, b](const Tensor& g) {
      accumulate(a, mm_nt(g, val(b)));
      accumulate(b, mm_tn(val(a), g));
    });
  }

  // A * B^T; the score-matrix workhorse.
  VarId matmul_nt(VarId a, VarId b) {
    Tensor out = mm_nt(val(a), val(b));
    return record(std::move(out), [this, a, b](const Tensor& g) {
      accumulate(a, mm_nn(g, val(b)));
      accumulate(b, mm_tn(g, val(a)));
    });
  }

  VarId relu(VarId a) {
    Tensor out = val(a);
    for (double& v : out.data) v = v > 0.0 ? v : 0.0;
    return record(std::move(out), [this, a](const Tensor& g) {
      Tensor& ga = nodes_[a].grad;
      const Tensor& va = val(a);
      for (std::size_t i = 0; i < g.data.size(); ++i)
        if (va.data[i] > 0.0) ga.data[i] += g.data[i];
    });
  }

  // Stabilized softmax along rows (axis 1).
  VarId row_softmax(VarId a) {
    require_shape(val(a).cols() > 0, "row_softmax: empty axis");
    Tensor out = val(a);
    softmax_rows_inplace(out);
    VarId id = record(Tensor(out), [this, a](const Tensor& g) { /* filled below */ });
    // backward needs the output value; rebind with the recorded id
    nodes_[id].backward = [this, a, id]() {
      const Tensor& y = val(id);
      const Tensor& g = nodes_[id].grad;
      Tensor& ga = nodes_[a].grad;
      for (int i = 0; i < y.rows(); ++i) {
        const double* yr = y.row_ptr(i);
        const double* gr = g.row_ptr(i);
        double dot = 0.0;
        for (int j = 0; j < y.cols(); ++j) dot += yr[j] * gr[j];
        double* gar = ga.row_ptr(i);
        for (int j = 0; j < y.cols(); ++j) gar[j] += yr[j] * (gr[j] - dot);
      }
    };
    return id;
  }

  VarId col_softmax(VarId a) {
    require_shape(val(a).rows() > 0, "col_softmax: empty axis");
    Tensor out = transposed(val(a));
    softmax_rows_inplace(out);
    out = transposed(out);
    VarId id = record(std::move(out), nullptr);
    nodes_[id].backward = [this, a, id]() {
      const Tensor& y = val(id);
      const Tensor& g = nodes_[id].grad;
      Tensor& ga = nodes_[a].grad;
      for (int j = 0; j < y.cols(); ++j) {
        double dot = 0.0;
        for (int i = 0; i < y.rows(); ++i) dot += y.at(i, j) * g.at(i, j);
        for (int i = 0; i < y.rows(); ++i) ga.at(i, j) += y.at(i, j) * (g.at(i, j) - dot);
      }
    };
    return id;
  }

  VarId sqrt_el(VarId a) {
    Tensor out = val(a);
    for (double& v : out.data) v = std::sqrt(v);
    VarId id = record(std::move(out), nullptr);
    nodes_[id].backward = [this, a, id]() {
      const Tensor& y = val(id);
      const Tensor& g = nodes_[id].grad;
      Tensor& ga = nodes_[a].grad;
      for (std::size_t i = 0; i < g.data.size(); ++i) ga.data[i] += 0.5 / y.data[i] * g.data[i];
    };
    return id;
  }

  VarId log_el(VarId a) {
    Tensor out = val(a);
    for (double& v : out.data) v = std::log(v);
    return record(std::move(out), [this, a](const Tensor& g) {
      Tensor& ga = nodes_[a].grad;
      const Tensor& va = val(a);
      for (std::size_t i = 0; i < g.data.size(); ++i) ga.data[i] += g.data[i] / va.data[i];
    });
  }

  // Elementwise max of two tensors; gradient follows the winning side (ties -> a).
  VarId elem_max(VarId a, VarId b) {
    require_shape(val(a).same_shape(val(b)), "elem_max: shape mismatch");
    Tensor out = val(a);
    const Tensor& vb = val(b);
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = std::max(out.data[i], vb.data[i]);
    return record(std::move(out), [this, a, b](const Tensor& g) {
      Tensor& ga = nodes_[a].grad;
      Tensor& gb = nodes_[b].grad;
      const Tensor& va = val(a);
      const Tensor& vb2 = val(b);
      for (std::size_t i = 0; i < g.data.size(); ++i) {
        if (va.data[i] >= vb2.data[i])
          ga.data[i] += g.data[i];
        else
          gb.data[i] += g.data[i];
      }
    });
  }

  VarId concat_cols(const std::vector<VarId>& parts) {
    require_shape(!parts.empty(), "concat_cols: no parts");
    const int r = val(parts[0]).rows();
    int c = 0;
    for (VarId p : parts) {
      require_shape(val(p).rows() == r, "concat_cols: row mismatch");
      c += val(p).cols();
    }
    Tensor out = Tensor::zeros(r, c);
    int off = 0;
    for (VarId p : parts) {
      const Tensor& vp = val(p);
      for (int i = 0; i < r; ++i)
        std::copy(vp.row_ptr(i), vp.row_ptr(i) + vp.cols(), out.row_ptr(i) + off);
      off += vp.cols();
    }
    auto parts_copy = parts;
    return record(std::move(out), [this, parts_copy, r](const Tensor& g) {
      int o = 0;
      for (VarId p : parts_copy) {
        Tensor& gp = nodes_[p].grad;
        const int pc = gp.cols();
        for (int i = 0; i < r; ++i) {
          const double* gr = g.row_ptr(i) + o;
          double* gpr = gp.row_ptr(i);
          for (int j = 0; j < pc; ++j) gpr[j] += gr[j];
        }
        o += pc;
      }
    });
  }

  VarId slice_cols(VarId a, int c0, int c1) {
    require_shape(0 <= c0 && c0 < c1 && c1 <= val(a).cols(), "slice_cols: bad range");
    const int r = val(a).rows(), w = c1 - c0;
    Tensor out = Tensor::zeros(r, w);
    for (int i = 0; i < r; ++i)
      std::copy(val(a).row_ptr(i) + c0, val(a).row_ptr(i) + c1, out.row_ptr(i));
    return record(std::move(out), [this, a, c0, w, r](const Tensor& g) {
      Tensor& ga = nodes_[a].grad;
      for (int i = 0; i < r; ++i) {
        const double* gr = g.row_ptr(i);
        double* gar = ga.row_ptr(i) + c0;
        for (int j = 0; j < w; ++j) gar[j] += gr[j];
      }
    });
  }

  VarId gather_rows(VarId a, std::vector<int> idx) {
    const int c = val(a).cols();
    Tensor out = Tensor::zeros(static_cast<int>(idx.size()), c);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      require_shape(idx[i] >= 0 && idx[i] < val(a).rows(), "gather_rows: index out of range");
      std::copy(val(a).row_ptr(idx[i]), val(a).row_ptr(idx[i]) + c, out.row_ptr(static_cast<int>(i)));
    }
    return record(std::move(out), [this, a, idx = std::move(idx), c](const Tensor& g) {
      Tensor& ga = nodes_[a].grad;
      for (std::size_t i = 0; i < idx.size(); ++i) {
        const double* gr = g.row_ptr(static_cast<int>(i));
        double* gar = ga.row_ptr(idx[i]);
        for (int j = 0; j < c; ++j) gar[j] += gr[j];
      }
    });
  }

  // Sums rows of a into n_segments output rows keyed by seg (one key per input row).
  VarId segment_sum_rows(VarId a, std::vector<int> seg, int n_segments) {
    require_shape(static_cast<int>(seg.size()) == val(a).rows(), "segment_sum_rows: key count != rows");
    const int c = val(a).cols();
    Tensor out = Tensor::zeros(n_segments, c);
    for (std::size_t i = 0; i < seg.size(); ++i) {
      require_shape(seg[i] >= 0 && seg[i] < n_segments, "segment_sum_rows: key out of range");
      const double* r = val(a).row_ptr(static_cast<int>(i));
      double* o = out.row_ptr(seg[i]);
      for (int j = 0; j < c; ++j) o[j] += r[j];
    }
    return record(std::move(out), [this, a, seg = std::move(seg), c](const Tensor& g) {
      Tensor& ga = nodes_[a].grad;
      for (std::size_t i = 0; i < seg.size(); ++i) {
        const double* gr = g.row_ptr(seg[i]);
        double* gar = ga.row_ptr(static_cast<int>(i));
        for (int j = 0; j < c; ++j) gar[j] += gr[j];
      }
    });
  }

  // Scales row i by constants s[i] (not differentiated through s).
  VarId row_scale(VarId a, std::vector<double> s) {
    require_shape(static_cast<int>(s.size()) == val(a).rows(), "row_scale: scale count != rows");
    Tensor out = val(a);
    for (int i = 0; i < out.rows(); ++i) {
      double* r = out.row_ptr(i);
      for (int j = 0; j < out.cols(); ++j) r[j] *= s[i];
    }
    return record(std::move(out), [this, a, s = std::move(s)](const Tensor& g) {
      Tensor& ga = nodes_[a].grad;
      for (int i = 0; i < g.rows(); ++i) {
        const double* gr = g.row_ptr(i);
        double* gar = ga.row_ptr(i);
        for (int j = 0; j < g.cols(); ++j) gar[j] += gr[j] * s[i];
      }
    });
  }

  VarId sum_all(VarId a) {
    double s = std::accumulate(val(a).data.begin(), val(a).data.end(), 0.0);
    return record(Tensor::scalar(s), [this, a](const Tensor& g) { axpy_const(a, g.data[0]); });
  }

  VarId gather_entries(VarId a, std::vector<std::pair<int, int>> ij) {
    Tensor out = Tensor::zeros(static_cast<int>(ij.size()), 1);
    for (std::size_t k = 0; k < ij.size(); ++k) {
      require_shape(ij[k].first >= 0 && ij[k].first < val(a).rows() && ij[k].second >= 0 && ij[k].second < val(a).cols(),
                    "gather_entries: index out of range");
      out.data[k] = val(a).at(ij[k].first, ij[k].second);
    }
    return record(std::move(out), [this, a, ij = std::move(ij)](const Tensor& g) {
      Tensor& ga = nodes_[a].grad;
      for (std::size_t k = 0; k < ij.size(); ++k) ga.at(ij[k].first, ij[k].second) += g.data[k];
    });
  }

  // (M+1)x(N+1) score matrix with the last row and column filled by the 1x1
  // dustbin parameter z.
  VarId augment_dustbin(VarId body, VarId z) {
    require_shape(val(z).numel() == 1, "augment_dustbin: z must be scalar");
    const int m = val(body).rows(), n = val(body).cols();
    const double zv = val(z).data[0];
    Tensor out = Tensor::full(m + 1, n + 1, zv);
    for (int i = 0; i < m; ++i)
      std::copy(val(body).row_ptr(i), val(body).row_ptr(i) + n, out.row_ptr(i));
    return record(std::move(out), [this, body, z, m, n](const Tensor& g) {
      Tensor& gb = nodes_[body].grad;
      for (int i = 0; i < m; ++i) {
        const double* gr = g.row_ptr(i);
        double* gbr = gb.row_ptr(i);
        for (int j = 0; j < n; ++j) gbr[j] += gr[j];
      }
      double gz = 0.0;
      for (int j = 0; j <= n; ++j) gz += g.at(m, j);
      for (int i = 0; i < m; ++i) gz += g.at(i, n);
      nodes_[z].grad.data[0] += gz;
    });
  }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::function<void()> backward;
  };

  std::vector<Node> nodes_;

  VarId record(Tensor out, std::function<void(const Tensor&)> back) {
    nodes_.push_back(Node{std::move(out), Tensor{}, nullptr});
    VarId id = static_cast<VarId>(nodes_.size() - 1);
    if (back)
      nodes_[id].backward = [this, id, back = std::move(back)]() { back(nodes_[id].grad); };
    return id;
  }

  void accumulate(VarId a, const Tensor& delta) {
    Tensor& g = nodes_[a].grad;
    for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] += delta.data[i];
  }

  void axpy(VarId a, double c, const double* src) {
    Tensor& g = nodes_[a].grad;
    for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] += c * src[i];
  }

  void axpy_const(VarId a, double c) {
    Tensor& g = nodes_[a].grad;
    for (double& v : g.data) v += c;
  }

  static void softmax_rows_inplace(Tensor& t) {
    for (int i = 0; i < t.rows(); ++i) {
      double* r = t.row_ptr(i);
      double mx = r[0];
      for (int j = 1; j < t.cols(); ++j) mx = std::max(mx, r[j]);
      double sum = 0.0;
      for (int j = 0; j < t.cols(); ++j) {
        r[j] = std::exp(r[j] - mx);
        sum += r[j];
      }
      for (int j = 0; j < t.cols(); ++j) r[j] /= sum;
    }
  }
};

// Free-function softmax over a plain tensor (no tape), axis 0 or 1.
inline Tensor softmax(const Tensor& x, int axis) {
  require_shape(axis == 0 || axis == 1, "softmax: axis must be 0 or 1");
  require_shape(axis == 1 ? x.cols() > 0 : x.rows() > 0, "softmax: empty axis");
  Tape t;
  auto a = t.leaf(x);
  return t.val(axis == 1 ? t.row_softmax(a) : t.col_softmax(a));
}

}  // namespace wfm

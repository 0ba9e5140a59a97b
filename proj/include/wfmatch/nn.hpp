#pragma once

#include <fstream>
#include <map>
#include <random>
#include <string>

#include <json.hpp>

#include "wfmatch/tape.hpp"
#include "wfmatch/tensor.hpp"

namespace wfm {

// Flat named parameter registry. Module code addresses tensors by dotted
// names ("block0.self.q.w"); Adam, checkpoints and the gradient checker all
// iterate the same map, so ordering is deterministic.
struct ParamStore {
  std::map<std::string, Tensor> tensors;

  Tensor& at(const std::string& name) {
    auto it = tensors.find(name);
    require_shape(it != tensors.end(), "param not found: " + name);
    return it->second;
  }
  const Tensor& at(const std::string& name) const {
    auto it = tensors.find(name);
    require_shape(it != tensors.end(), "param not found: " + name);
    return it->second;
  }
  bool has(const std::string& name) const { return tensors.count(name) > 0; }
};

// Binds store tensors onto a tape on first use and remembers their ids so the
// gradients can be read back per name after backward().
class Bound {
 public:
  Bound(Tape& tape, const ParamStore& store) : tape_(tape), store_(store) {}

  Tape::VarId operator[](const std::string& name) {
    auto it = ids_.find(name);
    if (it != ids_.end()) return it->second;
    Tape::VarId id = tape_.leaf(store_.at(name));
    ids_.emplace(name, id);
    return id;
  }

  bool has(const std::string& name) const { return store_.has(name); }

  // Gradient of every parameter touched by the forward pass, keyed by name.
  std::map<std::string, Tensor> grads() const {
    std::map<std::string, Tensor> g;
    for (const auto& [name, id] : ids_) g.emplace(name, tape_.grad(id));
    return g;
  }

  Tape& tape() { return tape_; }

 private:
  Tape& tape_;
  const ParamStore& store_;
  std::map<std::string, Tape::VarId> ids_;
};

inline void xavier_init(Tensor& w, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / (w.rows() + w.cols()));
  std::uniform_real_distribution<double> u(-limit, limit);
  for (double& v : w.data) v = u(rng);
}

// Registers a linear layer (w: in x out, b: 1 x out) under <prefix>.w/.b.
// Biases start at a small constant so a fully dead ReLU row leaves the next
// pre-activation strictly off the kink.
inline void add_linear(ParamStore& s, const std::string& prefix, int in, int out, std::mt19937_64& rng,
                       bool bias = true) {
  Tensor w = Tensor::zeros(in, out);
  xavier_init(w, rng);
  s.tensors.emplace(prefix + ".w", std::move(w));
  if (bias) s.tensors.emplace(prefix + ".b", Tensor::full(1, out, 0.01));
}

// Registers an MLP as layers <prefix>.l0 .. l{n-1}; ReLU between layers,
// linear output.
inline void add_mlp(ParamStore& s, const std::string& prefix, const std::vector<int>& dims, std::mt19937_64& rng) {
  for (std::size_t l = 0; l + 1 < dims.size(); ++l)
    add_linear(s, prefix + ".l" + std::to_string(l), dims[l], dims[l + 1], rng);
}

inline Tape::VarId linear_forward(Bound& p, const std::string& prefix, Tape::VarId x) {
  Tape& t = p.tape();
  Tape::VarId y = t.matmul(x, p[prefix + ".w"]);
  return p.has(prefix + ".b") ? t.add_row(y, p[prefix + ".b"]) : y;
}

inline Tape::VarId mlp_forward(Bound& p, const std::string& prefix, Tape::VarId x) {
  Tape& t = p.tape();
  Tape::VarId h = x;
  for (int l = 0;; ++l) {
    const std::string layer = prefix + ".l" + std::to_string(l);
    if (!p.has(layer + ".w")) {
      require_shape(l > 0, "mlp_forward: no layers under " + prefix);
      return h;
    }
    if (l > 0) h = t.relu(h);
    h = linear_forward(p, layer, h);
  }
}

// ---- checkpoint serialization: {name -> {shape, data}} ----

inline nlohmann::json params_to_json(const ParamStore& s) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, t] : s.tensors) j[name] = {{"shape", t.shape}, {"data", t.data}};
  return j;
}

inline ParamStore params_from_json(const nlohmann::json& j) {
  ParamStore s;
  for (auto it = j.begin(); it != j.end(); ++it) {
    Tensor t;
    t.shape = it.value().at("shape").get<std::vector<int>>();
    t.data = it.value().at("data").get<std::vector<double>>();
    require_shape(static_cast<std::size_t>(t.numel()) == t.data.size(),
                  "checkpoint tensor '" + it.key() + "': shape/data mismatch");
    s.tensors.emplace(it.key(), std::move(t));
  }
  return s;
}

// ---- Adam ----

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  void step(ParamStore& params, const std::map<std::string, Tensor>& grads) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
    for (const auto& [name, g] : grads) {
      Tensor& p = params.at(name);
      Tensor& m = state_slot(m_, name, p);
      Tensor& v = state_slot(v_, name, p);
      for (std::size_t i = 0; i < p.data.size(); ++i) {
        m.data[i] = cfg_.beta1 * m.data[i] + (1.0 - cfg_.beta1) * g.data[i];
        v.data[i] = cfg_.beta2 * v.data[i] + (1.0 - cfg_.beta2) * g.data[i] * g.data[i];
        p.data[i] -= cfg_.lr * (m.data[i] / bc1) / (std::sqrt(v.data[i] / bc2) + cfg_.eps);
      }
    }
  }

 private:
  AdamConfig cfg_;
  int64_t t_ = 0;
  std::map<std::string, Tensor> m_, v_;

  static Tensor& state_slot(std::map<std::string, Tensor>& m, const std::string& name, const Tensor& like) {
    auto it = m.find(name);
    if (it == m.end()) it = m.emplace(name, Tensor{like.shape, std::vector<double>(like.data.size(), 0.0)}).first;
    return it->second;
  }
};

// ---- finite-difference gradient checking ----

// f evaluates a scalar loss from the store; analytic holds d loss / d param.
// Returns max over all parameter entries of the relative disagreement with a
// central difference.
inline double grad_check(const std::function<double(const ParamStore&)>& f, ParamStore params,
                         const std::map<std::string, Tensor>& analytic, double eps = 1e-5) {
  double worst = 0.0;
  for (const auto& [name, g] : analytic) {
    Tensor& p = params.at(name);
    for (std::size_t i = 0; i < p.data.size(); ++i) {
      const double save = p.data[i];
      p.data[i] = save + eps;
      const double fp = f(params);
      p.data[i] = save - eps;
      const double fm = f(params);
      p.data[i] = save;
      require_shape(std::isfinite(fp) && std::isfinite(fm), "grad_check: non-finite objective at " + name);
      const double fd = (fp - fm) / (2.0 * eps);
      const double a = g.data[i];
      const double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-8});
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

}  // namespace wfm

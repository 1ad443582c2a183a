#include "jsp/nncore.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>

#include "jsp/error.hpp"

namespace jsp::nn {

std::size_t element_count(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

Tensor::Tensor(std::vector<int> dims, float fill)
    : shape(std::move(dims)), data(element_count(shape), fill) {}

// --- ParamStore -----------------------------------------------------------------

int ParamStore::add(std::string name, Tensor value) {
  if (contains(name)) throw ContractError("duplicate parameter '" + name + "'");
  if (value.data.size() != element_count(value.shape)) {
    throw ContractError("parameter '" + name + "' data does not match its shape");
  }
  names_.push_back(std::move(name));
  m_.emplace_back(value.shape);
  v_.emplace_back(value.shape);
  values_.push_back(std::move(value));
  return size() - 1;
}

int ParamStore::slot(std::string_view name) const {
  for (int i = 0; i < size(); ++i) {
    if (names_[i] == name) return i;
  }
  throw NotFoundError("unknown parameter '" + std::string(name) + "'");
}

bool ParamStore::contains(std::string_view name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

std::size_t ParamStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& v : values_) n += v.size();
  return n;
}

bool ParamStore::same_values(const ParamStore& other) const {
  return names_ == other.names_ && values_ == other.values_;
}

// --- Gradients --------------------------------------------------------------------

std::vector<float>& Gradients::ensure(int slot, std::size_t size) {
  auto& g = g_.at(slot);
  if (g.empty()) g.assign(size, 0.0f);
  return g;
}

void Gradients::add(const Gradients& other, float scale) {
  if (g_.size() < other.g_.size()) g_.resize(other.g_.size());
  for (std::size_t s = 0; s < other.g_.size(); ++s) {
    const auto& src = other.g_[s];
    if (src.empty()) continue;
    auto& dst = ensure(static_cast<int>(s), src.size());
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] += scale * src[i];
  }
}

void Gradients::scale(float factor) {
  for (auto& g : g_) {
    for (auto& x : g) x *= factor;
  }
}

double Gradients::global_norm() const {
  double sq = 0.0;
  for (const auto& g : g_) {
    for (float x : g) sq += static_cast<double>(x) * x;
  }
  return std::sqrt(sq);
}

double Gradients::clip_global_norm(double max_norm) {
  const double norm = global_norm();
  if (norm > max_norm && norm > 0.0) scale(static_cast<float>(max_norm / norm));
  return norm;
}

// --- Tape -------------------------------------------------------------------------

namespace {

float sigmoid(float z) { return 1.0f / (1.0f + std::exp(-z)); }

void require(bool ok, const char* what) {
  if (!ok) throw ContractError(what);
}

}  // namespace

Tape::Tape(const ParamStore& store)
    : store_(&store), param_nodes_(store.size(), -1), param_grads_(store.size()) {
  nodes_.reserve(256);
}

Var Tape::push(std::vector<int> shape, std::vector<float> value, bool needs_grad) {
  Node node;
  node.shape = std::move(shape);
  node.value = std::move(value);
  node.needs_grad = needs_grad;
  nodes_.push_back(std::move(node));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::param(int slot) {
  if (slot < 0 || slot >= store_->size()) throw ContractError("parameter slot out of range");
  if (param_nodes_[slot] >= 0) return Var{param_nodes_[slot]};
  Var v = push(store_->value(slot).shape, {}, true);
  nodes_[v.id].param_slot = slot;
  param_nodes_[slot] = v.id;
  return v;
}

Var Tape::param(std::string_view name) { return param(store_->slot(name)); }

Var Tape::constant(std::vector<float> values) {
  const int n = static_cast<int>(values.size());
  return push({n}, std::move(values), false);
}

Var Tape::zeros(int size) { return constant(std::vector<float>(size, 0.0f)); }

std::span<const float> Tape::value(Var v) const {
  const auto& node = nodes_.at(v.id);
  if (node.param_slot >= 0) return store_->value(node.param_slot).data;
  return node.value;
}

float Tape::scalar(Var v) const {
  auto val = value(v);
  require(val.size() == 1, "scalar(): value is not a scalar");
  return val[0];
}

const std::vector<int>& Tape::shape(Var v) const { return nodes_.at(v.id).shape; }

std::span<const float> Tape::grad(Var v) const {
  const auto& node = nodes_.at(v.id);
  if (node.param_slot >= 0) return param_grads_.at(node.param_slot);
  return node.grad;
}

std::vector<float>& Tape::grad_buffer(int id) {
  auto& node = nodes_[id];
  if (node.param_slot >= 0) {
    return param_grads_.ensure(node.param_slot, store_->value(node.param_slot).size());
  }
  if (node.grad.empty()) node.grad.assign(node.value.size(), 0.0f);
  return node.grad;
}

Var Tape::dense(Var x, Var weight, Var bias) {
  const auto& ws = shape(weight);
  require(ws.size() == 2, "dense: weight must be rank 2");
  const int k = ws[0];
  const int n = ws[1];
  auto xv = value(x);
  auto wv = value(weight);
  auto bv = value(bias);
  require(static_cast<int>(xv.size()) == k, "dense: input size does not match weight rows");
  require(static_cast<int>(bv.size()) == n, "dense: bias size does not match weight columns");

  std::vector<float> y(bv.begin(), bv.end());
  for (int i = 0; i < k; ++i) {
    const float xi = xv[i];
    const float* row = wv.data() + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) y[j] += xi * row[j];
  }
  Var out = push({n}, std::move(y), needs(x) || needs(weight) || needs(bias));
  if (!nodes_[out.id].needs_grad) return out;
  nodes_[out.id].backward = [x, weight, bias, out, k, n](Tape& t) {
    const std::vector<float> dy = t.nodes_[out.id].grad;
    if (t.needs(bias)) {
      auto& db = t.grad_buffer(bias.id);
      for (int j = 0; j < n; ++j) db[j] += dy[j];
    }
    if (t.needs(weight)) {
      auto xv = t.value(x);
      auto& dw = t.grad_buffer(weight.id);
      for (int i = 0; i < k; ++i) {
        const float xi = xv[i];
        if (xi == 0.0f) continue;
        float* row = dw.data() + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) row[j] += xi * dy[j];
      }
    }
    if (t.needs(x)) {
      auto wv = t.value(weight);
      auto& dx = t.grad_buffer(x.id);
      for (int i = 0; i < k; ++i) {
        const float* row = wv.data() + static_cast<std::size_t>(i) * n;
        float acc = 0.0f;
        for (int j = 0; j < n; ++j) acc += row[j] * dy[j];
        dx[i] += acc;
      }
    }
  };
  return out;
}

Var Tape::tanh(Var x) {
  auto xv = value(x);
  std::vector<float> y(xv.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::tanh(xv[i]);
  Var out = push({static_cast<int>(y.size())}, std::move(y), needs(x));
  if (!needs(out)) return out;
  nodes_[out.id].backward = [x, out](Tape& t) {
    const auto& y = t.nodes_[out.id].value;
    const auto dy = t.nodes_[out.id].grad;
    auto& dx = t.grad_buffer(x.id);
    for (std::size_t i = 0; i < y.size(); ++i) dx[i] += dy[i] * (1.0f - y[i] * y[i]);
  };
  return out;
}

Var Tape::relu(Var x) {
  auto xv = value(x);
  std::vector<float> y(xv.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = xv[i] > 0.0f ? xv[i] : 0.0f;
  Var out = push({static_cast<int>(y.size())}, std::move(y), needs(x));
  if (!needs(out)) return out;
  nodes_[out.id].backward = [x, out](Tape& t) {
    const auto& y = t.nodes_[out.id].value;
    const auto dy = t.nodes_[out.id].grad;
    auto& dx = t.grad_buffer(x.id);
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y[i] > 0.0f) dx[i] += dy[i];
    }
  };
  return out;
}

Var Tape::concat(std::span<const Var> parts) {
  std::vector<float> y;
  bool ng = false;
  for (Var p : parts) {
    auto v = value(p);
    y.insert(y.end(), v.begin(), v.end());
    ng = ng || needs(p);
  }
  Var out = push({static_cast<int>(y.size())}, std::move(y), ng);
  if (!ng) return out;
  std::vector<Var> inputs(parts.begin(), parts.end());
  nodes_[out.id].backward = [inputs, out](Tape& t) {
    const auto dy = t.nodes_[out.id].grad;
    std::size_t offset = 0;
    for (Var p : inputs) {
      const std::size_t len = t.value(p).size();
      if (t.needs(p)) {
        auto& dp = t.grad_buffer(p.id);
        for (std::size_t i = 0; i < len; ++i) dp[i] += dy[offset + i];
      }
      offset += len;
    }
  };
  return out;
}

Var Tape::add(Var a, Var b) {
  auto av = value(a);
  auto bv = value(b);
  require(av.size() == bv.size(), "add: size mismatch");
  std::vector<float> y(av.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = av[i] + bv[i];
  Var out = push({static_cast<int>(y.size())}, std::move(y), needs(a) || needs(b));
  if (!needs(out)) return out;
  nodes_[out.id].backward = [a, b, out](Tape& t) {
    const auto dy = t.nodes_[out.id].grad;
    for (Var v : {a, b}) {
      if (!t.needs(v)) continue;
      auto& dv = t.grad_buffer(v.id);
      for (std::size_t i = 0; i < dy.size(); ++i) dv[i] += dy[i];
    }
  };
  return out;
}

Var Tape::scale(Var x, float factor) {
  auto xv = value(x);
  std::vector<float> y(xv.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = factor * xv[i];
  Var out = push({static_cast<int>(y.size())}, std::move(y), needs(x));
  if (!needs(out)) return out;
  nodes_[out.id].backward = [x, out, factor](Tape& t) {
    const auto dy = t.nodes_[out.id].grad;
    auto& dx = t.grad_buffer(x.id);
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += factor * dy[i];
  };
  return out;
}

Var Tape::squared_error(Var x, float target) {
  const float d = scalar(x) - target;
  Var out = push({1}, {d * d}, needs(x));
  if (!needs(out)) return out;
  nodes_[out.id].backward = [x, out, d](Tape& t) {
    t.grad_buffer(x.id)[0] += 2.0f * d * t.nodes_[out.id].grad[0];
  };
  return out;
}

Var Tape::weighted_sum(std::span<const Var> scalars, std::span<const float> coeffs) {
  require(scalars.size() == coeffs.size(), "weighted_sum: size mismatch");
  float y = 0.0f;
  bool ng = false;
  for (std::size_t i = 0; i < scalars.size(); ++i) {
    y += coeffs[i] * scalar(scalars[i]);
    ng = ng || needs(scalars[i]);
  }
  Var out = push({1}, {y}, ng);
  if (!ng) return out;
  std::vector<Var> xs(scalars.begin(), scalars.end());
  std::vector<float> cs(coeffs.begin(), coeffs.end());
  nodes_[out.id].backward = [xs, cs, out](Tape& t) {
    const float dy = t.nodes_[out.id].grad[0];
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (t.needs(xs[i])) t.grad_buffer(xs[i].id)[0] += cs[i] * dy;
    }
  };
  return out;
}

LstmState Tape::lstm_cell(Var x, LstmState prev, const LstmWeights& w) {
  const auto& wxs = shape(w.input);
  const auto& whs = shape(w.hidden);
  require(wxs.size() == 2 && whs.size() == 2, "lstm_cell: weights must be rank 2");
  const int in = wxs[0];
  const int hid = whs[0];
  require(wxs[1] == 4 * hid && whs[1] == 4 * hid, "lstm_cell: weight width must be 4*hidden");
  auto xv = value(x);
  auto hv = value(prev.h);
  auto cv = value(prev.c);
  auto wx = value(w.input);
  auto wh = value(w.hidden);
  auto bv = value(w.bias);
  require(static_cast<int>(xv.size()) == in, "lstm_cell: input size mismatch");
  require(static_cast<int>(hv.size()) == hid && static_cast<int>(cv.size()) == hid,
          "lstm_cell: state size mismatch");
  require(static_cast<int>(bv.size()) == 4 * hid, "lstm_cell: bias size mismatch");

  const int g4 = 4 * hid;
  std::vector<float> z(bv.begin(), bv.end());
  for (int i = 0; i < in; ++i) {
    const float xi = xv[i];
    if (xi == 0.0f) continue;
    const float* row = wx.data() + static_cast<std::size_t>(i) * g4;
    for (int j = 0; j < g4; ++j) z[j] += xi * row[j];
  }
  for (int i = 0; i < hid; ++i) {
    const float hi = hv[i];
    if (hi == 0.0f) continue;
    const float* row = wh.data() + static_cast<std::size_t>(i) * g4;
    for (int j = 0; j < g4; ++j) z[j] += hi * row[j];
  }
  // Gate activations, laid out [i | f | g | o].
  std::vector<float> act(g4);
  std::vector<float> c_new(hid), h_new(hid), tanh_c(hid);
  for (int j = 0; j < hid; ++j) {
    const float ig = sigmoid(z[j]);
    const float fg = sigmoid(z[hid + j]);
    const float gg = std::tanh(z[2 * hid + j]);
    const float og = sigmoid(z[3 * hid + j]);
    act[j] = ig;
    act[hid + j] = fg;
    act[2 * hid + j] = gg;
    act[3 * hid + j] = og;
    c_new[j] = fg * cv[j] + ig * gg;
    tanh_c[j] = std::tanh(c_new[j]);
    h_new[j] = og * tanh_c[j];
  }
  const bool ng = needs(x) || needs(prev.h) || needs(prev.c) || needs(w.input) ||
                  needs(w.hidden) || needs(w.bias);
  // The cell state node carries the backward; it is created first so that
  // both outputs have complete gradients when it runs.
  Var c_out = push({hid}, std::move(c_new), ng);
  Var h_out = push({hid}, std::move(h_new), ng);
  if (!ng) return {h_out, c_out};
  nodes_[c_out.id].paired = h_out.id;

  nodes_[c_out.id].backward = [x, prev, w, c_out, h_out, in, hid, act = std::move(act),
                               tanh_c = std::move(tanh_c)](Tape& t) {
    const int g4 = 4 * hid;
    const auto& dh_node = t.nodes_[h_out.id].grad;
    const auto& dc_node = t.nodes_[c_out.id].grad;
    auto cv = t.value(prev.c);
    std::vector<float> dz(g4, 0.0f);
    std::vector<float> dc_prev(hid, 0.0f);
    for (int j = 0; j < hid; ++j) {
      const float ig = act[j], fg = act[hid + j], gg = act[2 * hid + j], og = act[3 * hid + j];
      const float dh = dh_node.empty() ? 0.0f : dh_node[j];
      float dc = dc_node.empty() ? 0.0f : dc_node[j];
      dc += dh * og * (1.0f - tanh_c[j] * tanh_c[j]);
      const float d_o = dh * tanh_c[j];
      dz[j] = dc * gg * ig * (1.0f - ig);
      dz[hid + j] = dc * cv[j] * fg * (1.0f - fg);
      dz[2 * hid + j] = dc * ig * (1.0f - gg * gg);
      dz[3 * hid + j] = d_o * og * (1.0f - og);
      dc_prev[j] = dc * fg;
    }
    if (t.needs(prev.c)) {
      auto& g = t.grad_buffer(prev.c.id);
      for (int j = 0; j < hid; ++j) g[j] += dc_prev[j];
    }
    if (t.needs(w.bias)) {
      auto& g = t.grad_buffer(w.bias.id);
      for (int j = 0; j < g4; ++j) g[j] += dz[j];
    }
    auto outer = [&](Var input, Var weight, int rows) {
      auto xv = t.value(input);
      if (t.needs(weight)) {
        auto& gw = t.grad_buffer(weight.id);
        for (int i = 0; i < rows; ++i) {
          const float xi = xv[i];
          if (xi == 0.0f) continue;
          float* row = gw.data() + static_cast<std::size_t>(i) * g4;
          for (int j = 0; j < g4; ++j) row[j] += xi * dz[j];
        }
      }
      if (t.needs(input)) {
        auto wv = t.value(weight);
        auto& gx = t.grad_buffer(input.id);
        for (int i = 0; i < rows; ++i) {
          const float* row = wv.data() + static_cast<std::size_t>(i) * g4;
          float acc = 0.0f;
          for (int j = 0; j < g4; ++j) acc += row[j] * dz[j];
          gx[i] += acc;
        }
      }
    };
    outer(x, w.input, in);
    outer(prev.h, w.hidden, hid);
  };
  return {h_out, c_out};
}

namespace {

/// Lexicographic order on element contents; the canonical processing order.
std::vector<int> canonical_order(const std::vector<std::span<const float>>& elems) {
  std::vector<int> order(elems.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return std::lexicographical_compare(elems[a].begin(), elems[a].end(), elems[b].begin(),
                                        elems[b].end());
  });
  return order;
}

}  // namespace

Var Tape::attention_readout(Var query, std::span<const Var> memory) {
  require(!memory.empty(), "attention_readout: empty set");
  auto q = value(query);
  const std::size_t d = q.size();
  std::vector<std::span<const float>> elems;
  elems.reserve(memory.size());
  for (Var m : memory) {
    elems.push_back(value(m));
    require(elems.back().size() == d, "attention_readout: element size mismatch");
  }
  const auto order = canonical_order(elems);
  const std::size_t n = memory.size();
  std::vector<float> score(n);
  for (std::size_t i = 0; i < n; ++i) {
    float s = 0.0f;
    for (std::size_t k = 0; k < d; ++k) s += q[k] * elems[i][k];
    score[i] = s;
  }
  const float top = *std::max_element(score.begin(), score.end());
  std::vector<float> weight(n);
  float total = 0.0f;
  for (int i : order) {
    weight[i] = std::exp(score[i] - top);
    total += weight[i];
  }
  for (auto& wgt : weight) wgt /= total;
  std::vector<float> r(d, 0.0f);
  for (int i : order) {
    for (std::size_t k = 0; k < d; ++k) r[k] += weight[i] * elems[i][k];
  }
  bool ng = needs(query);
  for (Var m : memory) ng = ng || needs(m);
  Var out = push({static_cast<int>(d)}, std::move(r), ng);
  if (!ng) return out;
  std::vector<Var> mem(memory.begin(), memory.end());
  nodes_[out.id].backward = [query, mem, out, weight = std::move(weight)](Tape& t) {
    const auto dr = t.nodes_[out.id].grad;
    auto q = t.value(query);
    const std::size_t d = q.size();
    const std::size_t n = mem.size();
    std::vector<float> da(n);
    float mean_da = 0.0f;
    for (std::size_t i = 0; i < n; ++i) {
      auto m = t.value(mem[i]);
      float s = 0.0f;
      for (std::size_t k = 0; k < d; ++k) s += dr[k] * m[k];
      da[i] = s;
      mean_da += weight[i] * s;
    }
    std::vector<float> dq(d, 0.0f);
    for (std::size_t i = 0; i < n; ++i) {
      const float de = weight[i] * (da[i] - mean_da);
      auto m = t.value(mem[i]);
      for (std::size_t k = 0; k < d; ++k) dq[k] += de * m[k];
      if (t.needs(mem[i])) {
        auto& dm = t.grad_buffer(mem[i].id);
        for (std::size_t k = 0; k < d; ++k) dm[k] += weight[i] * dr[k] + de * q[k];
      }
    }
    if (t.needs(query)) {
      auto& g = t.grad_buffer(query.id);
      for (std::size_t k = 0; k < d; ++k) g[k] += dq[k];
    }
  };
  return out;
}

Var Tape::masked_log_softmax_at(Var logits, std::span<const std::uint8_t> mask, int action) {
  auto z = value(logits);
  require(z.size() == mask.size(), "masked_log_softmax_at: mask size mismatch");
  require(action >= 0 && action < static_cast<int>(z.size()) && mask[action],
          "masked_log_softmax_at: action is masked or out of range");
  auto probs = masked_softmax(z, mask);
  float top = -std::numeric_limits<float>::infinity();
  std::vector<float> shifted;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (mask[i]) top = std::max(top, z[i]);
  }
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (mask[i]) shifted.push_back(std::exp(z[i] - top));
  }
  const float log_total = std::log(canonical_sum(std::move(shifted)));
  const float logp = z[action] - top - log_total;
  Var out = push({1}, {logp}, needs(logits));
  if (!needs(out)) return out;
  nodes_[out.id].backward = [logits, out, action, probs = std::move(probs)](Tape& t) {
    const float dy = t.nodes_[out.id].grad[0];
    auto& dz = t.grad_buffer(logits.id);
    for (std::size_t i = 0; i < probs.size(); ++i) {
      dz[i] += dy * ((static_cast<int>(i) == action ? 1.0f : 0.0f) - probs[i]);
    }
  };
  return out;
}

void Tape::backward(Var root) {
  require(root.valid() && root.id < static_cast<int>(nodes_.size()), "backward: invalid root");
  require(value(root).size() == 1, "backward: root must be a scalar");
  for (auto& node : nodes_) {
    if (node.param_slot < 0) std::fill(node.grad.begin(), node.grad.end(), 0.0f);
  }
  if (!nodes_[root.id].needs_grad) return;
  grad_buffer(root.id)[0] += 1.0f;
  for (int id = root.id; id >= 0; --id) {
    auto& node = nodes_[id];
    if (!node.needs_grad || !node.backward) continue;
    if (node.grad.empty()) {
      // An LSTM cell state may be unused while its hidden-state sibling is.
      if (node.paired < 0 || nodes_[node.paired].grad.empty()) continue;
      node.grad.assign(node.value.size(), 0.0f);
    }
    node.backward(*this);
  }
}

Gradients Tape::take_param_grads() {
  Gradients out = std::move(param_grads_);
  param_grads_ = Gradients(store_->size());
  return out;
}

void Tape::truncate(std::size_t mark) {
  if (mark > nodes_.size()) return;
  for (std::size_t id = mark; id < nodes_.size(); ++id) {
    if (nodes_[id].param_slot >= 0) param_nodes_[nodes_[id].param_slot] = -1;
  }
  nodes_.resize(mark);
}

// --- free functions -------------------------------------------------------------

float canonical_sum(std::vector<float> values) {
  std::sort(values.begin(), values.end());
  float total = 0.0f;
  for (float v : values) total += v;
  return total;
}

std::vector<float> masked_softmax(std::span<const float> logits, std::span<const std::uint8_t> mask) {
  if (logits.size() != mask.size()) throw ContractError("masked_softmax: mask size mismatch");
  float top = -std::numeric_limits<float>::infinity();
  bool any = false;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (mask[i]) {
      top = std::max(top, logits[i]);
      any = true;
    }
  }
  if (!any) throw ContractError("masked_softmax: every entry is masked");
  std::vector<float> out(logits.size(), 0.0f);
  std::vector<float> terms;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!mask[i]) continue;
    out[i] = std::exp(logits[i] - top);
    terms.push_back(out[i]);
  }
  const float total = canonical_sum(std::move(terms));
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (mask[i]) out[i] /= total;
  }
  return out;
}

Var set2set(Tape& tape, std::span<const Var> elements, const Set2SetWeights& weights, int steps) {
  if (elements.empty()) throw ContractError("set2set: empty set");
  if (steps < 1) throw ContractError("set2set: steps must be >= 1");
  const int hid = static_cast<int>(tape.value(elements.front()).size());
  Var q_star = tape.zeros(2 * hid);
  LstmState state{tape.zeros(hid), tape.zeros(hid)};
  for (int s = 0; s < steps; ++s) {
    state = tape.lstm_cell(q_star, state, weights.query);
    Var readout = tape.attention_readout(state.h, elements);
    q_star = tape.concat({state.h, readout});
  }
  return q_star;
}

void adam_step(ParamStore& store, const Gradients& grads, const AdamConfig& config) {
  for (int s = 0; s < std::min(store.size(), grads.slots()); ++s) {
    if (!grads.has(s)) continue;
    if (grads.at(s).size() != store.value(s).size()) {
      throw ContractError("gradient shape mismatch for parameter '" + store.name(s) + "'");
    }
    for (float g : grads.at(s)) {
      if (!std::isfinite(g)) {
        throw NumericError("non-finite gradient for parameter '" + store.name(s) + "'");
      }
    }
  }
  const std::int64_t t = store.adam_steps() + 1;
  store.set_adam_steps(t);
  const double c1 = 1.0 - std::pow(static_cast<double>(config.beta1), static_cast<double>(t));
  const double c2 = 1.0 - std::pow(static_cast<double>(config.beta2), static_cast<double>(t));
  for (int s = 0; s < std::min(store.size(), grads.slots()); ++s) {
    if (!grads.has(s)) continue;
    const auto& g = grads.at(s);
    auto& p = store.value(s).data;
    auto& m = store.first_moment(s).data;
    auto& v = store.second_moment(s).data;
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = config.beta1 * m[i] + (1.0f - config.beta1) * g[i];
      v[i] = config.beta2 * v[i] + (1.0f - config.beta2) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      p[i] -= static_cast<float>(config.lr * m_hat / (std::sqrt(v_hat) + config.eps));
    }
  }
}

Tensor uniform_weight(int fan_in, int fan_out, std::mt19937_64& rng) {
  const float limit = 1.0f / std::sqrt(static_cast<float>(fan_in));
  std::uniform_real_distribution<float> dist(-limit, limit);
  Tensor w({fan_in, fan_out});
  for (auto& x : w.data) x = dist(rng);
  return w;
}

void add_lstm_params(ParamStore& store, const std::string& prefix, int input, int hidden,
                     std::mt19937_64& rng) {
  store.add(prefix + ".wx", uniform_weight(input, 4 * hidden, rng));
  store.add(prefix + ".wh", uniform_weight(hidden, 4 * hidden, rng));
  Tensor b({4 * hidden});
  for (int j = hidden; j < 2 * hidden; ++j) b.data[j] = 1.0f;
  store.add(prefix + ".b", std::move(b));
}

void add_dense_params(ParamStore& store, const std::string& prefix, int input, int output,
                      std::mt19937_64& rng) {
  store.add(prefix + ".w", uniform_weight(input, output, rng));
  store.add(prefix + ".b", Tensor({output}));
}

LstmWeights lstm_weights(Tape& tape, const std::string& prefix) {
  return {tape.param(prefix + ".wx"), tape.param(prefix + ".wh"), tape.param(prefix + ".b")};
}

// --- checkpoints ------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'J', 'S', 'P', 'N'};

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
               static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw ParseError("checkpoint truncated", 0);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void write_checkpoint(std::ostream& out, const std::vector<CheckpointRecord>& records) {
  out.write(kMagic, 4);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(records.size()));
  for (const auto& r : records) {
    put_u32(out, static_cast<std::uint32_t>(r.name.size()));
    out.write(r.name.data(), static_cast<std::streamsize>(r.name.size()));
    put_u32(out, static_cast<std::uint32_t>(r.tensor.shape.size()));
    for (int d : r.tensor.shape) put_u32(out, static_cast<std::uint32_t>(d));
    for (float x : r.tensor.data) put_u32(out, std::bit_cast<std::uint32_t>(x));
  }
  if (!out) throw Error("checkpoint write failed");
}

std::vector<CheckpointRecord> read_checkpoint(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || !std::equal(magic, magic + 4, kMagic)) {
    throw ParseError("not a checkpoint (bad magic)", 0);
  }
  const auto version = get_u32(in);
  if (version != kCheckpointVersion) {
    throw ParseError("unsupported checkpoint version " + std::to_string(version), 0);
  }
  const auto count = get_u32(in);
  std::vector<CheckpointRecord> records;
  records.reserve(count);
  for (std::uint32_t r = 0; r < count; ++r) {
    CheckpointRecord rec;
    const auto len = get_u32(in);
    if (len > (1u << 16)) throw ParseError("checkpoint record name too long", 0);
    rec.name.resize(len);
    if (!in.read(rec.name.data(), len)) throw ParseError("checkpoint truncated", 0);
    const auto rank = get_u32(in);
    if (rank > 8) throw ParseError("checkpoint record rank too large", 0);
    for (std::uint32_t k = 0; k < rank; ++k) rec.tensor.shape.push_back(static_cast<int>(get_u32(in)));
    rec.tensor.data.resize(element_count(rec.tensor.shape));
    for (auto& x : rec.tensor.data) x = std::bit_cast<float>(get_u32(in));
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace jsp::nn

#pragma once

// Gradient-check cases shared by the unit tests and the acceptance suite.
// Each case builds a scalar on the tape and the same scalar in the
// double-precision reference, then compares every parameter gradient with
// central differences. No test framework is used here.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "jsp/env.hpp"
#include "jsp/nncore.hpp"
#include "jsp/policy.hpp"
#include "oracles/reference_nn.hpp"

namespace testing {

inline jsp::nn::Tensor random_tensor(std::vector<int> shape, std::mt19937_64& rng, float lo = -1.0f,
                                     float hi = 1.0f) {
  jsp::nn::Tensor t(std::move(shape));
  std::uniform_real_distribution<float> d(lo, hi);
  for (auto& x : t.data) x = d(rng);
  return t;
}

/// Adds a random [k x 1] projection so vector outputs reduce to a scalar.
inline void add_projection(jsp::nn::ParamStore& store, const std::string& name, int k, std::mt19937_64& rng) {
  store.add(name + ".w", random_tensor({k, 1}, rng));
  store.add(name + ".b", random_tensor({1}, rng));
}

inline jsp::nn::Var project(jsp::nn::Tape& t, jsp::nn::Var y, const std::string& name) {
  return t.dense(y, t.param(name + ".w"), t.param(name + ".b"));
}

inline double project_ref(const refnn::Params& p, const refnn::Vec& y, const std::string& name) {
  return refnn::dense(y, p[name + ".w"], p[name + ".b"])[0];
}

/// Copy of `store` values (moments dropped) so extra test parameters can be appended.
inline jsp::nn::ParamStore clone_values(const jsp::nn::ParamStore& store) {
  jsp::nn::ParamStore out;
  for (int s = 0; s < store.size(); ++s) out.add(store.name(s), store.value(s));
  return out;
}

inline jsp::ScheduleState random_state(const jsp::Instance& inst, int steps, std::mt19937_64& rng) {
  auto s = jsp::ScheduleState::initial(inst);
  for (int t = 0; t < steps && !s.terminal(); ++t) {
    auto legal = jsp::legal_actions(s, inst);
    std::uniform_int_distribution<std::size_t> pick(0, legal.size() - 1);
    jsp::apply_action(s, inst, legal[pick(rng)]);
  }
  return s;
}

struct CheckResult {
  double value_error = 0.0;  // |tape - reference| / max(1, |reference|)
  double worst = 0.0;        // worst per-tensor relative gradient error
  std::string worst_param;
};

inline CheckResult run_check(const jsp::nn::ParamStore& store,
                             const std::function<jsp::nn::Var(jsp::nn::Tape&)>& build,
                             const refnn::Objective& reference) {
  jsp::nn::Tape tape(store);
  const jsp::nn::Var loss = build(tape);
  tape.backward(loss);
  const auto p = refnn::Params::from(store);
  const double ref_value = reference(p);
  CheckResult r;
  r.value_error = std::abs(tape.scalar(loss) - ref_value) / std::max(1.0, std::abs(ref_value));
  for (int s = 0; s < store.size(); ++s) {
    const auto numeric = refnn::fd_gradient(p, store.name(s), reference);
    const double err = refnn::relative_error(tape.param_grads().at(s), numeric);
    if (err >= r.worst) {
      r.worst = err;
      r.worst_param = store.name(s);
    }
  }
  return r;
}

struct GradientCase {
  std::string name;
  double tolerance;
  std::function<CheckResult(std::uint64_t seed)> run;
};

inline std::vector<GradientCase> primitive_cases() {
  using namespace jsp::nn;
  using refnn::Params;
  using refnn::Vec;
  std::vector<GradientCase> cases;
  cases.push_back({"dense", 1e-4, [](std::uint64_t seed) {
                     std::mt19937_64 rng(seed);
                     ParamStore s;
                     s.add("x", random_tensor({5}, rng));
                     s.add("w", random_tensor({5, 4}, rng));
                     s.add("b", random_tensor({4}, rng));
                     add_projection(s, "p", 4, rng);
                     return run_check(
                         s, [](Tape& t) { return project(t, t.dense(t.param("x"), t.param("w"), t.param("b")), "p"); },
                         [](const Params& p) { return project_ref(p, refnn::dense(p["x"], p["w"], p["b"]), "p"); });
                   }});
  cases.push_back({"tanh", 1e-4, [](std::uint64_t seed) {
                     std::mt19937_64 rng(seed);
                     ParamStore s;
                     s.add("x", random_tensor({6}, rng, -2.0f, 2.0f));
                     add_projection(s, "p", 6, rng);
                     return run_check(
                         s, [](Tape& t) { return project(t, t.tanh(t.param("x")), "p"); },
                         [](const Params& p) { return project_ref(p, refnn::tanh_v(p["x"]), "p"); });
                   }});
  cases.push_back({"relu", 1e-4, [](std::uint64_t seed) {
                     std::mt19937_64 rng(seed);
                     ParamStore s;
                     auto x = random_tensor({6}, rng);
                     for (auto& v : x.data) v = v < 0 ? v - 0.1f : v + 0.1f;  // keep clear of the kink
                     s.add("x", x);
                     add_projection(s, "p", 6, rng);
                     return run_check(
                         s, [](Tape& t) { return project(t, t.relu(t.param("x")), "p"); },
                         [](const Params& p) { return project_ref(p, refnn::relu_v(p["x"]), "p"); });
                   }});
  cases.push_back({"concat/add/scale", 1e-4, [](std::uint64_t seed) {
                     std::mt19937_64 rng(seed);
                     ParamStore s;
                     s.add("a", random_tensor({2}, rng));
                     s.add("b", random_tensor({3}, rng));
                     s.add("c", random_tensor({5}, rng));
                     add_projection(s, "p", 5, rng);
                     return run_check(
                         s,
                         [](Tape& t) {
                           const Var cat = t.concat({t.param("a"), t.param("b")});
                           return project(t, t.scale(t.add(cat, t.param("c")), 1.7f), "p");
                         },
                         [](const Params& p) {
                           Vec v = p["a"];
                           v.insert(v.end(), p["b"].begin(), p["b"].end());
                           for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1.7 * (v[i] + p["c"][i]);
                           return project_ref(p, v, "p");
                         });
                   }});
  cases.push_back({"squared_error/weighted_sum", 1e-4, [](std::uint64_t seed) {
                     std::mt19937_64 rng(seed);
                     ParamStore s;
                     s.add("x", random_tensor({3}, rng));
                     add_projection(s, "p", 3, rng);
                     add_projection(s, "q", 3, rng);
                     return run_check(
                         s,
                         [](Tape& t) {
                           const Var a = t.squared_error(project(t, t.param("x"), "p"), 0.3f);
                           const Var b = project(t, t.param("x"), "q");
                           const std::vector<Var> terms{a, b};
                           const std::vector<float> coeffs{0.75f, -1.25f};
                           return t.weighted_sum(terms, coeffs);
                         },
                         [](const Params& p) {
                           const double a = project_ref(p, p["x"], "p") - 0.3;
                           return 0.75 * a * a - 1.25 * project_ref(p, p["x"], "q");
                         });
                   }});
  cases.push_back({"lstm_cell", 1e-4, [](std::uint64_t seed) {
                     std::mt19937_64 rng(seed);
                     ParamStore s;
                     s.add("x", random_tensor({3}, rng));
                     s.add("h", random_tensor({4}, rng));
                     s.add("c", random_tensor({4}, rng));
                     s.add("l.wx", random_tensor({3, 16}, rng));
                     s.add("l.wh", random_tensor({4, 16}, rng));
                     s.add("l.b", random_tensor({16}, rng));
                     add_projection(s, "p", 4, rng);
                     add_projection(s, "q", 4, rng);
                     return run_check(
                         s,
                         [](Tape& t) {
                           const auto out =
                               t.lstm_cell(t.param("x"), {t.param("h"), t.param("c")}, lstm_weights(t, "l"));
                           return t.add(project(t, out.h, "p"), project(t, out.c, "q"));
                         },
                         [](const Params& p) {
                           const auto out = refnn::lstm_named(p, "l", p["x"], {p["h"], p["c"]});
                           return project_ref(p, out.h, "p") + project_ref(p, out.c, "q");
                         });
                   }});
  cases.push_back({"attention_readout", 1e-4, [](std::uint64_t seed) {
                     std::mt19937_64 rng(seed);
                     ParamStore s;
                     s.add("q", random_tensor({4}, rng));
                     for (int i = 0; i < 3; ++i) s.add("m" + std::to_string(i), random_tensor({4}, rng, -2.0f, 2.0f));
                     add_projection(s, "p", 4, rng);
                     return run_check(
                         s,
                         [](Tape& t) {
                           const std::vector<Var> mem{t.param("m0"), t.param("m1"), t.param("m2")};
                           return project(t, t.attention_readout(t.param("q"), mem), "p");
                         },
                         [](const Params& p) {
                           return project_ref(p, refnn::attention(p["q"], {p["m0"], p["m1"], p["m2"]}), "p");
                         });
                   }});
  cases.push_back({"masked_log_softmax_at", 1e-4, [](std::uint64_t seed) {
                     std::mt19937_64 rng(seed);
                     ParamStore s;
                     s.add("z", random_tensor({5}, rng, -3.0f, 3.0f));
                     const std::vector<std::uint8_t> mask{1, 0, 1, 1, 1};
                     const int action = seed % 2 == 0 ? 2 : 4;
                     return run_check(
                         s, [&](Tape& t) { return t.masked_log_softmax_at(t.param("z"), mask, action); },
                         [&](const Params& p) { return refnn::log_softmax_at(p["z"], mask, action); });
                   }});
  return cases;
}

inline std::vector<GradientCase> composite_cases() {
  using namespace jsp::nn;
  using refnn::Params;
  using refnn::Vec;
  std::vector<GradientCase> cases;
  cases.push_back({"unrolled LSTM (3 steps)", 1e-3, [](std::uint64_t seed) {
                     std::mt19937_64 rng(seed);
                     ParamStore s;
                     for (int k = 0; k < 3; ++k) s.add("x" + std::to_string(k), random_tensor({3}, rng));
                     std::mt19937_64 init(seed);
                     add_lstm_params(s, "l", 3, 4, init);
                     add_projection(s, "p", 4, rng);
                     return run_check(
                         s,
                         [](Tape& t) {
                           LstmState st{t.zeros(4), t.zeros(4)};
                           const auto w = lstm_weights(t, "l");
                           for (int k = 0; k < 3; ++k) st = t.lstm_cell(t.param("x" + std::to_string(k)), st, w);
                           return project(t, st.h, "p");
                         },
                         [](const Params& p) {
                           refnn::LstmOut st{Vec(4, 0.0), Vec(4, 0.0)};
                           for (int k = 0; k < 3; ++k) st = refnn::lstm_named(p, "l", p["x" + std::to_string(k)], st);
                           return project_ref(p, st.h, "p");
                         });
                   }});
  cases.push_back({"set2set (2 steps)", 1e-3, [](std::uint64_t seed) {
                     std::mt19937_64 rng(seed);
                     ParamStore s;
                     for (int k = 0; k < 3; ++k) s.add("e" + std::to_string(k), random_tensor({4}, rng));
                     std::mt19937_64 init(seed);
                     add_lstm_params(s, "s2s", 8, 4, init);
                     add_projection(s, "p", 8, rng);
                     return run_check(
                         s,
                         [](Tape& t) {
                           const std::vector<Var> el{t.param("e0"), t.param("e1"), t.param("e2")};
                           return project(t, set2set(t, el, {lstm_weights(t, "s2s")}, 2), "p");
                         },
                         [](const Params& p) {
                           return project_ref(p, refnn::set2set(p, "s2s", {p["e0"], p["e1"], p["e2"]}, 2), "p");
                         });
                   }});
  return cases;
}

/// End-to-end cases through the actor-critic network.
inline std::vector<GradientCase> policy_cases() {
  using jsp::Instance;
  using jsp::PolicyNet;
  std::vector<GradientCase> cases;
  cases.push_back({"job encoder", 1e-3, [](std::uint64_t seed) {
                     const PolicyNet net({5, 1}, seed);
                     const auto inst = jsp::generate(2, 4, seed);
                     const auto f = jsp::static_features(inst, jsp::ScheduleState::initial(inst), 0);
                     auto store = clone_values(net.params());
                     std::mt19937_64 rng(seed);
                     add_projection(store, "p", 5, rng);
                     return run_check(
                         store, [&](jsp::nn::Tape& t) { return project(t, net.encode_job(t, f), "p"); },
                         [&](const refnn::Params& p) { return project_ref(p, refnn::encode_job(p, inst, 0, 0, 5), "p"); });
                   }});
  cases.push_back({"log pi end to end", 1e-3, [](std::uint64_t seed) {
                     const PolicyNet net({4, 2}, seed);
                     const auto inst = seed % 2 == 1 ? jsp::generate(2, 2, seed) : jsp::generate(3, 2, seed);
                     std::mt19937_64 rng(seed);
                     const auto s = random_state(inst, static_cast<int>(seed % 3), rng);
                     const int action = jsp::legal_actions(s, inst).back();
                     return run_check(
                         net.params(),
                         [&](jsp::nn::Tape& t) {
                           const auto g = net.build(t, inst, s, net.encode_instance(t, inst));
                           return t.masked_log_softmax_at(g.logits, g.mask, action);
                         },
                         [&](const refnn::Params& p) {
                           const auto r = refnn::policy_forward(p, inst, s, 4, 2);
                           return refnn::log_softmax_at(r.logits, r.mask, action);
                         });
                   }});
  cases.push_back({"critic loss end to end", 1e-3, [](std::uint64_t seed) {
                     const PolicyNet net({4, 2}, seed);
                     const auto inst = jsp::generate(3, 3, seed);
                     std::mt19937_64 rng(seed);
                     const auto s = random_state(inst, 2, rng);
                     const auto base = refnn::Params::from(net.params());
                     const float target = 1.3f * static_cast<float>(jsp::lower_bound(inst));
                     return run_check(
                         net.params(),
                         [&](jsp::nn::Tape& t) {
                           return t.squared_error(net.build(t, inst, s, net.encode_instance(t, inst)).value, target);
                         },
                         [&](const refnn::Params& p) {
                           // The critic reads a detached readout: only critic.* entries vary.
                           auto mixed = base;
                           for (const auto& [name, v] : p.values) {
                             if (name.rfind("critic.", 0) == 0) mixed.values[name] = v;
                           }
                           const double d = refnn::policy_forward(mixed, inst, s, 4, 2).value - target;
                           return d * d;
                         });
                   }});
  return cases;
}

}  // namespace testing

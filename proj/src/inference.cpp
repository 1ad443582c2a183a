#include "jsp/inference.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <random>

#include "jsp/error.hpp"

namespace jsp {

ProbabilityFn policy_probabilities(const PolicyNet& net, const Instance& inst) {
  auto evaluator = std::make_shared<PolicyEvaluator>(net, inst);
  return [evaluator](const ScheduleState& state) {
    auto out = evaluator->evaluate(state);
    return std::vector<double>(out.probs.begin(), out.probs.end());
  };
}

ProbabilityFn pdr_probabilities(PdrKind kind, const Instance& inst) {
  if (kind == PdrKind::Random) return uniform_probabilities(inst);
  return [kind, &inst](const ScheduleState& state) {
    std::vector<double> p(inst.n_jobs(), 0.0);
    p[pdr_select(kind, state, inst)] = 1.0;
    return p;
  };
}

ProbabilityFn uniform_probabilities(const Instance& inst) {
  return [&inst](const ScheduleState& state) {
    std::vector<double> p(inst.n_jobs(), 0.0);
    auto legal = legal_actions(state, inst);
    if (legal.empty()) throw ContractError("no legal action in a terminal state");
    for (int j : legal) p[j] = 1.0 / static_cast<double>(legal.size());
    return p;
  };
}

namespace {

std::vector<double> checked_probs(const ProbabilityFn& probs, const ScheduleState& state,
                                  const Instance& inst) {
  auto p = probs(state);
  if (static_cast<int>(p.size()) != inst.n_jobs()) {
    throw ContractError("probability vector has the wrong length");
  }
  return p;
}

int argmax_legal(const std::vector<double>& p, const ScheduleState& state) {
  int best = -1;
  for (int i = 0; i < static_cast<int>(p.size()); ++i) {
    if (state.finished(i)) continue;
    if (best < 0 || p[i] > p[best]) best = i;
  }
  if (best < 0) throw ContractError("no legal action in a terminal state");
  return best;
}

DecodeResult finish(ScheduleState state, std::vector<int> actions) {
  DecodeResult r;
  r.makespan = state.partial_makespan;
  r.schedule.start = std::move(state.start);
  r.actions = std::move(actions);
  r.candidates = {r.makespan};
  return r;
}

DecodeResult greedy_from(const Instance& inst, const ProbabilityFn& probs, ScheduleState state,
                         std::vector<int> actions) {
  while (state.step < inst.n_ops()) {
    const int a = argmax_legal(checked_probs(probs, state, inst), state);
    apply_action(state, inst, a);
    actions.push_back(a);
  }
  return finish(std::move(state), std::move(actions));
}

}  // namespace

DecodeResult decode_greedy(const Instance& inst, const ProbabilityFn& probs) {
  return greedy_from(inst, probs, ScheduleState::initial(inst), {});
}

DecodeResult decode_sampling(const Instance& inst, const ProbabilityFn& probs, int n_samples,
                             std::uint64_t seed) {
  if (n_samples < 1) throw ContractError("sampling needs at least one sample");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  DecodeResult best;
  std::vector<Time> all;
  for (int k = 0; k < n_samples; ++k) {
    auto state = ScheduleState::initial(inst);
    std::vector<int> actions;
    while (state.step < inst.n_ops()) {
      const auto p = checked_probs(probs, state, inst);
      double total = 0.0;
      int last = -1;
      for (int i = 0; i < inst.n_jobs(); ++i) {
        if (!state.finished(i) && p[i] > 0.0) {
          total += p[i];
          last = i;
        }
      }
      if (last < 0) throw ContractError("policy gives zero mass to every legal action");
      double u = unit(rng) * total;
      int a = last;
      for (int i = 0; i < inst.n_jobs(); ++i) {
        if (state.finished(i) || p[i] <= 0.0) continue;
        if (u < p[i]) {
          a = i;
          break;
        }
        u -= p[i];
      }
      apply_action(state, inst, a);
      actions.push_back(a);
    }
    all.push_back(state.partial_makespan);
    if (k == 0 || state.partial_makespan < best.makespan) {
      best = finish(std::move(state), std::move(actions));
    }
  }
  best.candidates = std::move(all);
  return best;
}

DecodeResult decode_pomo(const Instance& inst, const ProbabilityFn& probs, int width) {
  if (width < 1) throw ContractError("POMO width must be >= 1");
  const auto s0 = ScheduleState::initial(inst);
  const auto p = checked_probs(probs, s0, inst);
  std::vector<int> order(inst.n_jobs());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return p[a] > p[b]; });
  order.resize(std::min<std::size_t>(order.size(), static_cast<std::size_t>(width)));

  DecodeResult best;
  std::vector<Time> all;
  for (std::size_t k = 0; k < order.size(); ++k) {
    auto state = s0;
    apply_action(state, inst, order[k]);
    auto r = greedy_from(inst, probs, std::move(state), {order[k]});
    all.push_back(r.makespan);
    if (k == 0 || r.makespan < best.makespan) best = std::move(r);
  }
  best.candidates = std::move(all);
  return best;
}

DecodeResult decode_beam(const Instance& inst, const ProbabilityFn& probs, int width) {
  if (width < 1) throw ContractError("beam width must be >= 1");
  struct Beam {
    ScheduleState state;
    std::vector<int> actions;
    double log_prob = 0.0;
  };
  struct Candidate {
    double log_prob;
    int parent;
    double prob;
    int action;
  };
  std::vector<Beam> beams{{ScheduleState::initial(inst), {}, 0.0}};
  for (int depth = 0; depth < inst.n_ops(); ++depth) {
    std::vector<Candidate> cands;
    for (int b = 0; b < static_cast<int>(beams.size()); ++b) {
      const auto p = checked_probs(probs, beams[b].state, inst);
      for (int a = 0; a < inst.n_jobs(); ++a) {
        if (beams[b].state.finished(a)) continue;
        const double lp = p[a] > 0.0 ? std::log(p[a]) : -std::numeric_limits<double>::infinity();
        cands.push_back({beams[b].log_prob + lp, b, p[a], a});
      }
    }
    std::stable_sort(cands.begin(), cands.end(), [](const Candidate& x, const Candidate& y) {
      if (x.log_prob != y.log_prob) return x.log_prob > y.log_prob;
      if (x.parent != y.parent) return x.parent < y.parent;
      // Distinct probabilities can share a rounded log; keep greedy's order.
      if (x.prob != y.prob) return x.prob > y.prob;
      return x.action < y.action;
    });
    if (static_cast<int>(cands.size()) > width) cands.resize(width);
    std::vector<Beam> next;
    next.reserve(cands.size());
    for (const auto& c : cands) {
      Beam nb = beams[c.parent];
      apply_action(nb.state, inst, c.action);
      nb.actions.push_back(c.action);
      nb.log_prob = c.log_prob;
      next.push_back(std::move(nb));
    }
    beams = std::move(next);
  }
  DecodeResult best;
  std::vector<Time> all;
  for (std::size_t k = 0; k < beams.size(); ++k) {
    all.push_back(beams[k].state.partial_makespan);
    if (k == 0 || beams[k].state.partial_makespan < best.makespan) {
      best = finish(beams[k].state, beams[k].actions);
    }
  }
  best.candidates = std::move(all);
  return best;
}

std::string Strategy::name() const {
  switch (kind) {
    case Kind::Greedy: return "greedy";
    case Kind::Sampling: return "sample:" + std::to_string(param);
    case Kind::Pomo: return "pomo:" + std::to_string(param);
    case Kind::Beam: return "beam:" + std::to_string(param);
  }
  return "?";
}

std::optional<Strategy> parse_strategy(std::string_view text) {
  if (text == "greedy") return Strategy{Strategy::Kind::Greedy, 1};
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) return std::nullopt;
  const auto head = text.substr(0, colon);
  const auto tail = text.substr(colon + 1);
  int value = 0;
  auto [ptr, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), value);
  if (ec != std::errc() || ptr != tail.data() + tail.size() || value < 1) return std::nullopt;
  if (head == "sample") return Strategy{Strategy::Kind::Sampling, value};
  if (head == "pomo") return Strategy{Strategy::Kind::Pomo, value};
  if (head == "beam") return Strategy{Strategy::Kind::Beam, value};
  return std::nullopt;
}

DecodeResult decode(const Instance& inst, const ProbabilityFn& probs, const Strategy& strategy,
                    std::uint64_t seed) {
  switch (strategy.kind) {
    case Strategy::Kind::Greedy: return decode_greedy(inst, probs);
    case Strategy::Kind::Sampling: return decode_sampling(inst, probs, strategy.param, seed);
    case Strategy::Kind::Pomo: return decode_pomo(inst, probs, strategy.param);
    case Strategy::Kind::Beam: return decode_beam(inst, probs, strategy.param);
  }
  throw ContractError("unknown strategy");
}

}  // namespace jsp

#include "jsp/pdr.hpp"

#include <algorithm>

#include "jsp/error.hpp"

namespace jsp {

std::string_view pdr_name(PdrKind kind) {
  switch (kind) {
    case PdrKind::Spt: return "spt";
    case PdrKind::FddWkr: return "fddwkr";
    case PdrKind::Mwkr: return "mwkr";
    case PdrKind::Mopnr: return "mopnr";
    case PdrKind::Random: return "random";
  }
  return "?";
}

std::optional<PdrKind> pdr_from_name(std::string_view name) {
  for (auto k : {PdrKind::Spt, PdrKind::FddWkr, PdrKind::Mwkr, PdrKind::Mopnr, PdrKind::Random}) {
    if (pdr_name(k) == name) return k;
  }
  return std::nullopt;
}

bool pdr_minimizes(PdrKind kind) { return kind == PdrKind::Spt || kind == PdrKind::FddWkr; }

double pdr_score(PdrKind kind, const ScheduleState& state, const Instance& inst, int job) {
  const int m = inst.n_machines();
  const int next = state.next_op.at(job);
  if (next >= m) throw ContractError("pdr_score: job " + std::to_string(job) + " is finished");
  const auto& ops = inst.job(job);
  switch (kind) {
    case PdrKind::Spt:
      return static_cast<double>(ops[next].duration);
    case PdrKind::Mwkr:
    case PdrKind::FddWkr: {
      Time remaining = 0;
      for (int j = next; j < m; ++j) remaining += ops[j].duration;
      if (kind == PdrKind::Mwkr) return static_cast<double>(remaining);
      Time flow = 0;
      for (int j = 0; j <= next; ++j) flow += ops[j].duration;
      return static_cast<double>(flow) / static_cast<double>(remaining);
    }
    case PdrKind::Mopnr:
      return static_cast<double>(m - next);
    case PdrKind::Random:
      return 0.0;
  }
  return 0.0;
}

int pdr_select(PdrKind kind, const ScheduleState& state, const Instance& inst) {
  if (kind == PdrKind::Random) throw ContractError("pdr_select: RANDOM needs a PdrPolicy");
  const bool minimize = pdr_minimizes(kind);
  int best = -1;
  double best_score = 0.0;
  for (int i = 0; i < inst.n_jobs(); ++i) {
    if (state.finished(i)) continue;
    const double s = pdr_score(kind, state, inst, i);
    if (best < 0 || (minimize ? s < best_score : s > best_score)) {
      best = i;
      best_score = s;
    }
  }
  if (best < 0) throw ContractError("pdr_select: terminal state has no legal action");
  return best;
}

int PdrPolicy::select(const ScheduleState& state, const Instance& inst) {
  if (kind_ != PdrKind::Random) return pdr_select(kind_, state, inst);
  auto legal = legal_actions(state, inst);
  if (legal.empty()) throw ContractError("pdr_select: terminal state has no legal action");
  std::uniform_int_distribution<std::size_t> pick(0, legal.size() - 1);
  return legal[pick(rng_)];
}

RolloutResult pdr_rollout(const Instance& inst, PdrKind kind, std::uint64_t seed) {
  PdrPolicy policy(kind, seed);
  return rollout(inst, [&](const ScheduleState& s, const Instance& x) { return policy.select(s, x); });
}

Time best_pdr_makespan(const Instance& inst) {
  Time best = -1;
  for (auto kind : kDeterministicRules) {
    const Time mk = pdr_rollout(inst, kind).makespan;
    if (best < 0 || mk < best) best = mk;
  }
  return best;
}

}  // namespace jsp

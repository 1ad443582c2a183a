#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "jsp/env.hpp"

namespace jsp {

enum class PdrKind { Spt, FddWkr, Mwkr, Mopnr, Random };

/// CLI names: spt, fddwkr, mwkr, mopnr, random.
std::string_view pdr_name(PdrKind kind);
std::optional<PdrKind> pdr_from_name(std::string_view name);

/// The four deterministic rules, in reporting order.
inline constexpr PdrKind kDeterministicRules[] = {PdrKind::Spt, PdrKind::FddWkr, PdrKind::Mwkr,
                                                   PdrKind::Mopnr};

/// Raw rule criterion for an unfinished job:
///   SPT     duration of the next operation          (smaller is better)
///   FDD/WKR work through the next op / remaining     (smaller is better)
///   MWKR    remaining work                           (larger is better)
///   MOPNR   remaining operation count                (larger is better)
/// RANDOM has no criterion and scores 0.
double pdr_score(PdrKind kind, const ScheduleState& state, const Instance& inst, int job);

bool pdr_minimizes(PdrKind kind);

/// Dispatch policy for one rule. Deterministic rules break ties toward the
/// lowest job index; RANDOM draws uniformly among legal jobs from its own
/// seeded generator, so a copy of the object continues the same stream.
class PdrPolicy {
 public:
  explicit PdrPolicy(PdrKind kind, std::uint64_t seed = 0) : kind_(kind), rng_(seed) {}

  PdrKind kind() const noexcept { return kind_; }
  int select(const ScheduleState& state, const Instance& inst);
  int operator()(const ScheduleState& state, const Instance& inst) { return select(state, inst); }

 private:
  PdrKind kind_;
  std::mt19937_64 rng_;
};

/// Stateless select for deterministic rules.
int pdr_select(PdrKind kind, const ScheduleState& state, const Instance& inst);

/// Full rollout of one rule.
RolloutResult pdr_rollout(const Instance& inst, PdrKind kind, std::uint64_t seed = 0);

/// Minimum makespan over the four deterministic rules.
Time best_pdr_makespan(const Instance& inst);

}  // namespace jsp

#pragma once

#include <cstdint>
#include <vector>

#include "jsp/env.hpp"

namespace jsp {

struct OracleOptions {
  std::int64_t node_budget = 50'000'000;
  /// Disable bounding to enumerate every dispatch sequence.
  bool prune = true;
};

struct OracleResult {
  enum class Status { Optimal, BudgetExceeded };
  Status status = Status::Optimal;
  /// Proven minimum when Optimal, best incumbent otherwise.
  Time makespan = 0;
  Schedule schedule;
  std::vector<int> actions;
  std::int64_t nodes = 0;

  bool optimal() const noexcept { return status == Status::Optimal; }
};

/// Minimum makespan over all dispatch sequences under append semantics, found
/// by depth-first branch-and-bound. Intended for n*m <= 16. The incumbent is
/// seeded with the best deterministic dispatch rule.
OracleResult solve_exact(const Instance& inst, const OracleOptions& options = {});

}  // namespace jsp

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "jsp/instance.hpp"

namespace jsp {

/// Resolution state of a partially built schedule under append semantics:
/// a dispatched operation starts at max(job ready, machine free) and never
/// back-fills an earlier idle gap.
struct ScheduleState {
  std::vector<int> next_op;        // per job, first unscheduled operation (m when finished)
  std::vector<Time> job_ready;     // per job, completion of its last scheduled operation
  std::vector<Time> machine_free;  // per machine, completion of its last scheduled operation
  std::vector<std::vector<Time>> start;  // n x m, -1 while unscheduled
  Time partial_makespan = 0;
  int step = 0;

  static ScheduleState initial(const Instance& inst);

  bool finished(int job) const { return next_op[job] >= static_cast<int>(start[job].size()); }
  bool terminal() const;

  friend bool operator==(const ScheduleState&, const ScheduleState&) = default;
};

/// Completed assignment of start times; completion = start + duration.
struct Schedule {
  std::vector<std::vector<Time>> start;

  Time makespan(const Instance& inst) const;
  friend bool operator==(const Schedule&, const Schedule&) = default;
};

struct StepResult {
  ScheduleState state;
  Time reward = 0;
};

/// Jobs with unscheduled operations, ascending.
std::vector<int> legal_actions(const ScheduleState& state, const Instance& inst);

/// Dispatches the next operation of `job` in place and returns the reward
/// tau(s_{t+1}) - tau(s_t). Throws ContractError for finished or unknown jobs.
Time apply_action(ScheduleState& state, const Instance& inst, int job);

StepResult step(const ScheduleState& state, const Instance& inst, int job);

using DispatchPolicy = std::function<int(const ScheduleState&, const Instance&)>;

struct RolloutResult {
  Schedule schedule;
  Time makespan = 0;
  std::vector<int> actions;
  std::vector<Time> rewards;
};

RolloutResult rollout(const Instance& inst, const DispatchPolicy& policy);

/// Replays a fixed dispatch sequence (job indices).
RolloutResult replay(const Instance& inst, const std::vector<int>& actions);

struct Violation {
  enum class Kind { Shape, Unscheduled, Precedence, Overlap };
  Kind kind;
  // Offending operations as (job, op index); `second` is unused for Shape/Unscheduled.
  std::pair<int, int> first;
  std::pair<int, int> second;
  std::string message;
};

/// Checks shape, precedence, and no-overlap; returns the first violation found.
std::optional<Violation> validate(const Schedule& sched, const Instance& inst);

/// max(longest job, most loaded machine).
Time lower_bound(const Instance& inst);

/// 100 * (makespan - ub) / ub, unrounded.
double gap_percent_raw(double makespan, Time ub);

/// As gap_percent_raw, rounded half-up to two decimals.
double gap_percent(double makespan, Time ub);

/// Half-up rounding to two decimals for reporting.
double round_half_up_2(double value);

/// CSV `job,op,machine,start,end` with a trailing `makespan,<value>` line.
std::string schedule_csv(const Schedule& sched, const Instance& inst);

}  // namespace jsp

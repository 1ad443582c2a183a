#include "jsp/env.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "jsp/error.hpp"

namespace jsp {

ScheduleState ScheduleState::initial(const Instance& inst) {
  ScheduleState s;
  s.next_op.assign(inst.n_jobs(), 0);
  s.job_ready.assign(inst.n_jobs(), 0);
  s.machine_free.assign(inst.n_machines(), 0);
  s.start.assign(inst.n_jobs(), std::vector<Time>(inst.n_machines(), -1));
  return s;
}

bool ScheduleState::terminal() const {
  for (std::size_t i = 0; i < next_op.size(); ++i) {
    if (!finished(static_cast<int>(i))) return false;
  }
  return true;
}

Time Schedule::makespan(const Instance& inst) const {
  Time best = 0;
  for (int i = 0; i < inst.n_jobs(); ++i) {
    for (int j = 0; j < inst.n_machines(); ++j) {
      best = std::max(best, start[i][j] + inst.op(i, j).duration);
    }
  }
  return best;
}

std::vector<int> legal_actions(const ScheduleState& state, const Instance& inst) {
  std::vector<int> out;
  for (int i = 0; i < inst.n_jobs(); ++i) {
    if (state.next_op[i] < inst.n_machines()) out.push_back(i);
  }
  return out;
}

Time apply_action(ScheduleState& state, const Instance& inst, int job) {
  if (job < 0 || job >= inst.n_jobs()) {
    throw ContractError("action " + std::to_string(job) + " is not a job index");
  }
  const int j = state.next_op[job];
  if (j >= inst.n_machines()) {
    throw ContractError("illegal action: job " + std::to_string(job) + " is finished");
  }
  const auto& op = inst.op(job, j);
  const Time begin = std::max(state.job_ready[job], state.machine_free[op.machine]);
  const Time end = begin + op.duration;
  state.start[job][j] = begin;
  state.job_ready[job] = end;
  state.machine_free[op.machine] = end;
  state.next_op[job] = j + 1;
  ++state.step;
  const Time before = state.partial_makespan;
  state.partial_makespan = std::max(before, end);
  return state.partial_makespan - before;
}

StepResult step(const ScheduleState& state, const Instance& inst, int job) {
  StepResult r{state, 0};
  r.reward = apply_action(r.state, inst, job);
  return r;
}

RolloutResult rollout(const Instance& inst, const DispatchPolicy& policy) {
  auto state = ScheduleState::initial(inst);
  RolloutResult out;
  out.actions.reserve(inst.n_ops());
  out.rewards.reserve(inst.n_ops());
  for (int t = 0; t < inst.n_ops(); ++t) {
    const int job = policy(state, inst);
    out.rewards.push_back(apply_action(state, inst, job));
    out.actions.push_back(job);
  }
  out.makespan = state.partial_makespan;
  out.schedule.start = std::move(state.start);
  return out;
}

RolloutResult replay(const Instance& inst, const std::vector<int>& actions) {
  if (static_cast<int>(actions.size()) != inst.n_ops()) {
    throw ContractError("replay needs exactly n*m actions");
  }
  std::size_t t = 0;
  return rollout(inst, [&](const ScheduleState&, const Instance&) { return actions[t++]; });
}

namespace {

std::string op_name(int job, int op) {
  return "O(" + std::to_string(job) + "," + std::to_string(op) + ")";
}

}  // namespace

std::optional<Violation> validate(const Schedule& sched, const Instance& inst) {
  using K = Violation::Kind;
  const int n = inst.n_jobs();
  const int m = inst.n_machines();
  if (static_cast<int>(sched.start.size()) != n) {
    return Violation{K::Shape, {-1, -1}, {-1, -1}, "schedule has wrong number of jobs"};
  }
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(sched.start[i].size()) != m) {
      return Violation{K::Shape, {i, -1}, {-1, -1}, "job " + std::to_string(i) + " has wrong length"};
    }
    for (int j = 0; j < m; ++j) {
      if (sched.start[i][j] < 0) {
        return Violation{K::Unscheduled, {i, j}, {-1, -1}, op_name(i, j) + " is unscheduled"};
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j + 1 < m; ++j) {
      if (sched.start[i][j + 1] < sched.start[i][j] + inst.op(i, j).duration) {
        return Violation{K::Precedence, {i, j}, {i, j + 1},
                         "precedence: " + op_name(i, j + 1) + " starts before " + op_name(i, j) +
                             " completes"};
      }
    }
  }
  struct Slot {
    Time begin, end;
    int job, op;
  };
  std::vector<std::vector<Slot>> per_machine(m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      const auto& op = inst.op(i, j);
      per_machine[op.machine].push_back({sched.start[i][j], sched.start[i][j] + op.duration, i, j});
    }
  }
  for (int k = 0; k < m; ++k) {
    auto& slots = per_machine[k];
    std::sort(slots.begin(), slots.end(), [](const Slot& a, const Slot& b) {
      return std::tie(a.begin, a.job, a.op) < std::tie(b.begin, b.job, b.op);
    });
    for (std::size_t s = 1; s < slots.size(); ++s) {
      if (slots[s].begin < slots[s - 1].end) {
        const auto& a = slots[s - 1];
        const auto& b = slots[s];
        return Violation{K::Overlap, {a.job, a.op}, {b.job, b.op},
                         "no-overlap: " + op_name(a.job, a.op) + " and " + op_name(b.job, b.op) +
                             " overlap on machine " + std::to_string(k)};
      }
    }
  }
  return std::nullopt;
}

Time lower_bound(const Instance& inst) {
  Time best = inst.max_job_work();
  for (int k = 0; k < inst.n_machines(); ++k) best = std::max(best, inst.machine_load(k));
  return best;
}

double gap_percent_raw(double makespan, Time ub) {
  if (ub < 1) throw ContractError("upper bound must be >= 1");
  return 100.0 * (makespan - static_cast<double>(ub)) / static_cast<double>(ub);
}

double round_half_up_2(double value) {
  // The small bias absorbs representation error of exact halves such as 0.125.
  return std::floor(value * 100.0 + 0.5 + 1e-9) / 100.0;
}

double gap_percent(double makespan, Time ub) {
  if (ub < 1) throw ContractError("upper bound must be >= 1");
  const double integral = std::nearbyint(makespan);
  if (integral == makespan && std::abs(makespan) < 1e15) {
    // Exact rational rounding: floor((20000 * (mk - ub) + ub) / (2 * ub)) hundredths.
    const long long num = 20000LL * (static_cast<long long>(integral) - ub) + ub;
    const long long den = 2LL * ub;
    long long q = num / den;
    if ((num % den != 0) && ((num < 0) != (den < 0))) --q;
    return static_cast<double>(q) / 100.0;
  }
  return round_half_up_2(gap_percent_raw(makespan, ub));
}

std::string schedule_csv(const Schedule& sched, const Instance& inst) {
  std::ostringstream out;
  out << "job,op,machine,start,end\n";
  for (int i = 0; i < inst.n_jobs(); ++i) {
    for (int j = 0; j < inst.n_machines(); ++j) {
      const auto& op = inst.op(i, j);
      out << i << ',' << j << ',' << op.machine << ',' << sched.start[i][j] << ','
          << sched.start[i][j] + op.duration << '\n';
    }
  }
  out << "makespan," << sched.makespan(inst) << '\n';
  return out.str();
}

}  // namespace jsp

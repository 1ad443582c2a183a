#include "jsp/oracle.hpp"

#include <algorithm>
#include <limits>

#include "jsp/pdr.hpp"

namespace jsp {

namespace {

class BranchAndBound {
 public:
  BranchAndBound(const Instance& inst, const OracleOptions& options)
      : inst_(inst), options_(options) {
    remaining_job_.resize(inst.n_jobs());
    for (int i = 0; i < inst.n_jobs(); ++i) remaining_job_[i] = inst.job_work(i);
    remaining_machine_.resize(inst.n_machines());
    for (int k = 0; k < inst.n_machines(); ++k) remaining_machine_[k] = inst.machine_load(k);
  }

  OracleResult run() {
    // The dispatch-rule incumbent tightens pruning and guarantees a schedule
    // even when the budget runs out before the first leaf.
    for (auto kind : kDeterministicRules) {
      auto r = pdr_rollout(inst_, kind);
      if (best_ < 0 || r.makespan < best_) {
        best_ = r.makespan;
        best_actions_ = r.actions;
      }
    }
    auto state = ScheduleState::initial(inst_);
    path_.reserve(inst_.n_ops());
    search(state);

    OracleResult out;
    out.status = exhausted_ ? OracleResult::Status::BudgetExceeded : OracleResult::Status::Optimal;
    out.nodes = nodes_;
    out.actions = best_actions_;
    if (!best_actions_.empty()) {
      auto r = replay(inst_, best_actions_);
      out.makespan = r.makespan;
      out.schedule = std::move(r.schedule);
    }
    return out;
  }

 private:
  Time bound(const ScheduleState& s) const {
    Time lb = s.partial_makespan;
    for (int i = 0; i < inst_.n_jobs(); ++i) lb = std::max(lb, s.job_ready[i] + remaining_job_[i]);
    for (int k = 0; k < inst_.n_machines(); ++k) {
      lb = std::max(lb, s.machine_free[k] + remaining_machine_[k]);
    }
    return lb;
  }

  void search(ScheduleState& s) {
    if (exhausted_) return;
    if (++nodes_ > options_.node_budget) {
      exhausted_ = true;
      return;
    }
    if (s.step == inst_.n_ops()) {
      if (best_ < 0 || s.partial_makespan < best_) {
        best_ = s.partial_makespan;
        best_actions_ = path_;
      }
      return;
    }
    if (options_.prune && best_ >= 0 && bound(s) >= best_) return;

    for (int job = 0; job < inst_.n_jobs(); ++job) {
      if (s.finished(job)) continue;
      const int j = s.next_op[job];
      const auto& op = inst_.op(job, j);
      // Undo record for the in-place dispatch.
      const Time ready = s.job_ready[job];
      const Time free = s.machine_free[op.machine];
      const Time tau = s.partial_makespan;

      apply_action(s, inst_, job);
      remaining_job_[job] -= op.duration;
      remaining_machine_[op.machine] -= op.duration;
      path_.push_back(job);

      search(s);

      path_.pop_back();
      remaining_job_[job] += op.duration;
      remaining_machine_[op.machine] += op.duration;
      s.start[job][j] = -1;
      s.job_ready[job] = ready;
      s.machine_free[op.machine] = free;
      s.partial_makespan = tau;
      s.next_op[job] = j;
      --s.step;
      if (exhausted_) return;
    }
  }

  const Instance& inst_;
  OracleOptions options_;
  std::vector<Time> remaining_job_;
  std::vector<Time> remaining_machine_;
  std::vector<int> path_;
  std::vector<int> best_actions_;
  Time best_ = -1;
  std::int64_t nodes_ = 0;
  bool exhausted_ = false;
};

}  // namespace

OracleResult solve_exact(const Instance& inst, const OracleOptions& options) {
  return BranchAndBound(inst, options).run();
}

}  // namespace jsp

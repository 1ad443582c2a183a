#include <memory>
#include <random>

#include "common.hpp"
#include "doctest.h"
#include "jsp/env.hpp"
#include "jsp/error.hpp"

using namespace jsp;

namespace {

DispatchPolicy random_policy(std::uint64_t seed) {
  auto rng = std::make_shared<std::mt19937_64>(seed);
  return [rng](const ScheduleState& s, const Instance& inst) {
    auto legal = legal_actions(s, inst);
    std::uniform_int_distribution<std::size_t> pick(0, legal.size() - 1);
    return legal[pick(*rng)];
  };
}

}  // namespace

TEST_CASE("legal_actions") {
  const auto inst = testing::example_2x2();
  auto s = ScheduleState::initial(inst);
  CHECK(legal_actions(s, inst) == std::vector<int>{0, 1});
  apply_action(s, inst, 0);
  apply_action(s, inst, 0);
  CHECK(legal_actions(s, inst) == std::vector<int>{1});
  apply_action(s, inst, 1);
  apply_action(s, inst, 1);
  CHECK(legal_actions(s, inst).empty());
  CHECK(s.terminal());
}

TEST_CASE("step follows append semantics on the worked example") {
  const auto inst = testing::example_2x2();
  const auto s0 = ScheduleState::initial(inst);
  const auto r1 = step(s0, inst, 0);
  CHECK(r1.reward == 3);
  CHECK(r1.state.start[0][0] == 0);
  CHECK(r1.state.partial_makespan == 3);
  const auto r2 = step(r1.state, inst, 1);
  CHECK(r2.reward == 0);
  CHECK(r2.state.start[1][0] == 0);
  CHECK(r2.state.partial_makespan == 3);
  CHECK(s0.step == 0);  // step() leaves its input untouched
}

TEST_CASE("step rejects finished jobs") {
  const auto inst = testing::single_op();
  auto s = ScheduleState::initial(inst);
  apply_action(s, inst, 0);
  CHECK_THROWS_AS(apply_action(s, inst, 0), ContractError);
  CHECK_THROWS_AS(step(ScheduleState::initial(inst), inst, 3), ContractError);
}

TEST_CASE("rollout makespans") {
  const auto one = testing::single_op();
  CHECK(rollout(one, [](const ScheduleState&, const Instance&) { return 0; }).makespan == 7);

  const auto inst = testing::example_2x2();
  const auto r = replay(inst, {0, 1, 0, 1});
  CHECK(r.makespan == 7);
  // Hand trace: J1O1 [0,3) M0, J2O1 [0,2) M1, J1O2 [3,5) M1, J2O2 [3,7) M0.
  CHECK(r.schedule.start == std::vector<std::vector<Time>>{{0, 3}, {0, 3}});
  CHECK(r.rewards == std::vector<Time>{3, 0, 2, 2});
}

TEST_CASE("rollouts telescope, validate and respect the lower bound") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto inst = generate(3, 3, seed);
    const auto r = rollout(inst, random_policy(seed));
    Time total = 0;
    for (Time x : r.rewards) {
      CHECK(x >= 0);
      total += x;
    }
    CHECK(total == r.makespan);
    CHECK(r.makespan >= lower_bound(inst));
    CHECK_FALSE(validate(r.schedule, inst).has_value());
    CHECK(replay(inst, r.actions).schedule == r.schedule);
    // Cross-check against the independent simulator.
    CHECK(oracle::sim_makespan(testing::as_jobs(inst), 3, r.actions) == r.makespan);
  }
}

TEST_CASE("state invariants hold along an episode") {
  const auto inst = generate(4, 3, 9);
  auto s = ScheduleState::initial(inst);
  auto policy = random_policy(3);
  while (!s.terminal()) {
    apply_action(s, inst, policy(s, inst));
    int sum = 0;
    Time tau = 0;
    for (int i = 0; i < inst.n_jobs(); ++i) {
      sum += s.next_op[i];
      if (s.next_op[i] > 0) {
        const int j = s.next_op[i] - 1;
        CHECK(s.job_ready[i] == s.start[i][j] + inst.op(i, j).duration);
      }
      for (int j = 0; j < s.next_op[i]; ++j) tau = std::max(tau, s.start[i][j] + inst.op(i, j).duration);
    }
    CHECK(sum == s.step);
    CHECK(tau == s.partial_makespan);
  }
}

TEST_CASE("validate reports overlap and precedence") {
  const auto inst = testing::example_2x2();
  Schedule overlap{{{0, 3}, {0, 2}}};  // J1O1 [0,3) and J2O2 [2,6) share M0
  auto v = validate(overlap, inst);
  REQUIRE(v.has_value());
  CHECK(v->kind == Violation::Kind::Overlap);
  CHECK(v->first == std::pair<int, int>{0, 0});
  CHECK(v->second == std::pair<int, int>{1, 1});

  Schedule prec{{{0, 2}, {0, 3}}};  // J1O2 starts before J1O1 completes
  v = validate(prec, inst);
  REQUIRE(v.has_value());
  CHECK(v->kind == Violation::Kind::Precedence);

  Schedule unscheduled{{{0, -1}, {0, 3}}};
  v = validate(unscheduled, inst);
  REQUIRE(v.has_value());
  CHECK(v->kind == Violation::Kind::Unscheduled);
}

TEST_CASE("gap_percent rounding") {
  CHECK(gap_percent(1462, 1231) == doctest::Approx(18.77).epsilon(1e-12));
  CHECK(gap_percent(1231, 1231) == 0.0);
  CHECK(gap_percent(5653, 5464) == doctest::Approx(3.46).epsilon(1e-12));
  CHECK(gap_percent(1001, 8000) == doctest::Approx(-87.49).epsilon(1e-12));
  // Exact half rounds up: 100 * 1 / 8 = 12.5 -> 12.50; 100 * 1 / 16000 = 0.00625 -> 0.01.
  CHECK(gap_percent(16001, 16000) == doctest::Approx(0.01).epsilon(1e-12));
}

TEST_CASE("lower_bound") {
  CHECK(lower_bound(testing::example_2x2()) == 7);
  CHECK(lower_bound(testing::single_op()) == 7);
  const auto dominant = Instance::create("d", {{{0, 50}, {1, 50}}, {{1, 1}, {0, 1}}});
  CHECK(lower_bound(dominant) == 100);
}

TEST_CASE("schedule_csv layout") {
  const auto inst = testing::example_2x2();
  const auto r = replay(inst, {0, 1, 0, 1});
  CHECK(schedule_csv(r.schedule, inst) ==
        "job,op,machine,start,end\n0,0,0,0,3\n0,1,1,3,5\n1,0,1,0,2\n1,1,0,3,7\nmakespan,7\n");
}

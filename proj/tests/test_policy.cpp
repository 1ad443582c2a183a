#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>

#include "common.hpp"
#include "doctest.h"
#include "jsp/error.hpp"
#include "jsp/policy.hpp"
#include "gradcheck.hpp"
#include "oracles/reference_nn.hpp"

using namespace jsp;

using testing::random_state;

namespace {

/// Same state expressed for an instance whose jobs were reordered by `order`.
ScheduleState permute_state(const ScheduleState& s, const std::vector<int>& order) {
  ScheduleState p = s;
  for (std::size_t k = 0; k < order.size(); ++k) {
    p.next_op[k] = s.next_op[order[k]];
    p.job_ready[k] = s.job_ready[order[k]];
    p.start[k] = s.start[order[k]];
  }
  return p;
}

}  // namespace

TEST_CASE("static features") {
  const auto one = testing::single_op();
  const auto f = static_features(one, ScheduleState::initial(one), 0);
  REQUIRE(f.size() == 1);
  CHECK(f[0][0] == doctest::Approx(7.0 / 99.0));
  CHECK(f[0][1] == 1.0f);
  CHECK(f[0][2] == 1.0f);

  const auto inst = generate(4, 5, 2);
  auto s = ScheduleState::initial(inst);
  CHECK(static_features(inst, s, 1).size() == 5);
  apply_action(s, inst, 1);
  const auto after = static_features(inst, s, 1);
  CHECK(after.size() == 4);
  for (const auto& v : after) {
    for (float x : v) {
      CHECK(x >= 0.0f);
      CHECK(x <= 1.0f);
    }
  }
  CHECK(static_features(inst, s, 0).front().size() == 3);
  apply_action(s, inst, 1);
  CHECK_THROWS_AS(static_features(one, [&] { auto t = ScheduleState::initial(one); apply_action(t, one, 0); return t; }(), 0),
                  ContractError);
}

TEST_CASE("dynamic features") {
  const auto inst = generate(5, 4, 7);
  const auto s0 = ScheduleState::initial(inst);
  for (int i = 0; i < 5; ++i) {
    const auto d = dynamic_features(inst, s0, i);
    CHECK(d[0] == 0.0f);
    CHECK(d[1] == 0.0f);
    CHECK(d[2] == doctest::Approx(static_cast<double>(inst.job_work(i)) / inst.total_work()));
    CHECK(d[3] == 1.0f);
  }
  std::mt19937_64 rng(1);
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const auto g = generate(2 + seed % 7, 2 + seed % 5, seed);
    for (int steps = 0; steps < g.n_ops(); steps += 3) {
      const auto s = random_state(g, steps, rng);
      for (int i = 0; i < g.n_jobs(); ++i) {
        if (s.finished(i)) continue;
        for (float x : dynamic_features(g, s, i)) {
          CHECK(x >= 0.0f);
          CHECK(x <= 1.0f);
        }
      }
    }
  }
}

TEST_CASE("encode_job") {
  PolicyNet net({8, 2}, 3);
  nn::Tape t(net.params());
  const std::vector<StaticFeature> a{{0.1f, 0.3f, 1.0f}, {0.7f, 0.2f, 0.5f}};
  const std::vector<StaticFeature> same = a;
  const std::vector<StaticFeature> reversed{a[1], a[0]};
  const auto ea = t.value(net.encode_job(t, a));
  const auto eb = t.value(net.encode_job(t, same));
  const auto er = t.value(net.encode_job(t, reversed));
  CHECK(std::vector<float>(ea.begin(), ea.end()) == std::vector<float>(eb.begin(), eb.end()));
  CHECK(std::vector<float>(ea.begin(), ea.end()) != std::vector<float>(er.begin(), er.end()));
  CHECK(ea.size() == 8);
}

TEST_CASE("forward matches the double-precision reference") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const PolicyNet net({16, 3}, seed);
    const auto inst = generate(4, 3, seed);
    std::mt19937_64 rng(seed);
    const auto s = random_state(inst, static_cast<int>(seed * 2), rng);
    const auto out = net.forward(inst, s);
    const auto ref = refnn::policy_forward(refnn::Params::from(net.params()), inst, s, 16, 3);
    double top = -1e300, total = 0;
    for (int i = 0; i < 4; ++i) {
      if (ref.mask[i]) top = std::max(top, ref.logits[i]);
    }
    for (int i = 0; i < 4; ++i) {
      if (ref.mask[i]) total += std::exp(ref.logits[i] - top);
    }
    for (int i = 0; i < 4; ++i) {
      const double p = ref.mask[i] ? std::exp(ref.logits[i] - top) / total : 0.0;
      CHECK(out.probs[i] == doctest::Approx(p).epsilon(1e-5));
    }
    CHECK(out.value == doctest::Approx(ref.value).epsilon(1e-4));
  }
}

TEST_CASE("identical jobs get equal probability") {
  const PolicyNet net({}, 4);
  const auto inst = Instance::create("twins", {{{0, 5}, {1, 9}}, {{0, 5}, {1, 9}}});
  const auto out = net.forward(inst, ScheduleState::initial(inst));
  CHECK(out.probs[0] == out.probs[1]);
  CHECK(out.probs[0] == doctest::Approx(0.5));
}

TEST_CASE("finished jobs get probability exactly 0") {
  const PolicyNet net({}, 5);
  const auto inst = generate(3, 2, 5);
  auto s = ScheduleState::initial(inst);
  apply_action(s, inst, 1);
  apply_action(s, inst, 1);
  const auto out = net.forward(inst, s);
  CHECK(out.probs[1] == 0.0f);
  CHECK(out.probs[0] + out.probs[2] == doctest::Approx(1.0).epsilon(1e-6));
  while (!s.terminal()) apply_action(s, inst, legal_actions(s, inst).front());
  CHECK_THROWS_AS(net.forward(inst, s), ContractError);
}

TEST_CASE("permutation equivariance is exact") {
  const PolicyNet net({}, 6);
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const auto inst = generate(5, 4, 600 + trial);
    const auto s = random_state(inst, trial % inst.n_ops(), rng);
    std::vector<int> order(5);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    const auto pinst = inst.permuted(order);
    const auto ps = permute_state(s, order);
    const auto a = net.forward(inst, s);
    const auto b = net.forward(pinst, ps);
    for (int k = 0; k < 5; ++k) CHECK(b.probs[k] == a.probs[order[k]]);
    CHECK(b.value == a.value);
  }
}

TEST_CASE("one network serves every size") {
  const PolicyNet net({}, 7);
  for (auto [n, m] : {std::pair{6, 6}, std::pair{10, 10}, std::pair{3, 8}}) {
    const auto inst = generate(n, m, 1);
    const auto out = net.forward(inst, ScheduleState::initial(inst));
    CHECK(static_cast<int>(out.probs.size()) == n);
    double total = 0;
    for (float p : out.probs) total += p;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("encoder, log pi and critic-loss gradients end to end") {
  testing::check_cases(testing::policy_cases(), 1, 5);
}

TEST_CASE("checkpoints round-trip and reject mismatches") {
  const PolicyNet net({12, 2}, 9);
  std::stringstream buf;
  net.save(buf);
  std::stringstream in(buf.str());
  const auto back = PolicyNet::load(in);
  CHECK(back.config() == net.config());
  CHECK(back.params().same_values(net.params()));
  const auto inst = generate(4, 4, 1);
  CHECK(back.forward(inst, ScheduleState::initial(inst)).probs ==
        net.forward(inst, ScheduleState::initial(inst)).probs);

  // A record with the wrong shape for its config.
  std::vector<nn::CheckpointRecord> records;
  nn::Tensor cfg({4});
  cfg.data = {12, 2, 3, 4};
  records.push_back({"__config__", cfg});
  for (int s = 0; s < net.params().size(); ++s) {
    auto t = net.params().value(s);
    if (s == 0) t = nn::Tensor({1, 1});
    records.push_back({net.params().name(s), t});
  }
  std::stringstream bad;
  nn::write_checkpoint(bad, records);
  CHECK_THROWS_AS(PolicyNet::load(bad), ContractError);
  CHECK_THROWS_AS(PolicyNet::load_file("/nonexistent/ckpt.bin"), NotFoundError);
}

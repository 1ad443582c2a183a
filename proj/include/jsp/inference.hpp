#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "jsp/env.hpp"
#include "jsp/pdr.hpp"
#include "jsp/policy.hpp"

namespace jsp {

/// Action distribution over job indices for the states of one instance.
/// Finished jobs must get probability 0.
using ProbabilityFn = std::function<std::vector<double>(const ScheduleState&)>;

/// Binds a trained network to an instance. The returned function owns its
/// evaluator; the network must outlive it.
ProbabilityFn policy_probabilities(const PolicyNet& net, const Instance& inst);

/// One-hot distribution on the job a deterministic rule selects.
ProbabilityFn pdr_probabilities(PdrKind kind, const Instance& inst);

/// Uniform over unfinished jobs.
ProbabilityFn uniform_probabilities(const Instance& inst);

struct DecodeResult {
  Schedule schedule;
  Time makespan = 0;
  std::vector<int> actions;
  /// Makespans of every completed candidate, in generation order.
  std::vector<Time> candidates;
};

/// Argmax at every step; ties go to the lowest job index.
DecodeResult decode_greedy(const Instance& inst, const ProbabilityFn& probs);

/// Best of `n_samples` rollouts with a_t ~ pi(.|s_t). Sample k uses the k-th
/// segment of one seeded stream, so a larger N extends a smaller one.
DecodeResult decode_sampling(const Instance& inst, const ProbabilityFn& probs, int n_samples,
                             std::uint64_t seed);

/// The `width` most likely first actions, each continued greedily. A width
/// larger than the number of jobs is clamped.
DecodeResult decode_pomo(const Instance& inst, const ProbabilityFn& probs, int width);

/// Beam search keeping the `width` trajectories with the highest cumulative
/// log-probability; the completed survivor with the smallest makespan wins.
/// Ties in likelihood break on parent beam index, then on the step
/// probability, then on action index.
DecodeResult decode_beam(const Instance& inst, const ProbabilityFn& probs, int width);

struct Strategy {
  enum class Kind { Greedy, Sampling, Pomo, Beam };
  Kind kind = Kind::Greedy;
  int param = 1;

  /// `greedy`, `sample:N`, `pomo:W`, `beam:K`.
  std::string name() const;
};

std::optional<Strategy> parse_strategy(std::string_view text);

DecodeResult decode(const Instance& inst, const ProbabilityFn& probs, const Strategy& strategy,
                    std::uint64_t seed);

}  // namespace jsp

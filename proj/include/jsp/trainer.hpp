#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "jsp/env.hpp"
#include "jsp/nncore.hpp"
#include "jsp/policy.hpp"

namespace jsp {

struct TrainConfig {
  int batch_size = 16;      // 128 in the full-scale setting
  float lr = 1e-4f;
  int iterations = 2000;    // 45000 in the full-scale setting
  int eval_every = 100;
  std::uint64_t seed = 1;
  float critic_weight = 1.0f;
  /// Global-norm clipping threshold; disabled when unset.
  std::optional<double> clip_norm;
  /// Worker threads for batch rollouts; 0 picks hardware concurrency.
  int threads = 1;

  void validate() const;
};

struct EpisodeStep {
  ScheduleState state;  // before the action
  int action = 0;
  float log_prob = 0.0f;
  Time reward = 0;
  float value = 0.0f;
};

struct EpisodeTrace {
  std::vector<EpisodeStep> steps;
  Time makespan = 0;
};

/// An episode together with the tape that produced it, ready for backward.
struct EpisodeGraph {
  std::unique_ptr<nn::Tape> tape;
  EpisodeTrace trace;
  std::vector<nn::Var> log_probs;
  std::vector<nn::Var> values;
};

enum class ActionMode { Sample, Greedy };

/// Rolls out one episode while recording the policy graph.
EpisodeGraph record_episode(const PolicyNet& net, const Instance& inst, ActionMode mode,
                            std::mt19937_64& rng);

/// Records the episode that follows a fixed action sequence.
EpisodeGraph record_episode(const PolicyNet& net, const Instance& inst, std::span<const int> actions);

/// Undiscounted suffix sums G_t = sum_{t' >= t} R_{t'}.
std::vector<double> returns(const EpisodeTrace& trace);

/// Surrogate actor loss (1/B) sum_b sum_t (G - b) log pi(a_t | s_t), with the
/// baseline treated as a constant. Its gradient is the negated policy-gradient
/// estimate.
nn::Var actor_surrogate(EpisodeGraph& graph, int batch_size);

/// (1/B) sum_t (b(s_t) - G_t)^2 on the graph's tape.
nn::Var critic_objective(EpisodeGraph& graph, int batch_size);

/// Policy-gradient estimate -(1/B) sum (G - b) grad log pi over the batch.
nn::Gradients policy_gradient(std::span<EpisodeGraph> batch);

struct CriticLoss {
  double loss = 0.0;
  nn::Gradients grads;
};

CriticLoss critic_loss(std::span<EpisodeGraph> batch);

struct IterationMetrics {
  int iteration = 0;
  int level = 0;
  double mean_makespan = 0.0;
  double mean_gap = std::numeric_limits<double>::quiet_NaN();
  double critic_loss = 0.0;
};

struct TrainingBatch {
  int level = 0;
  std::vector<Instance> instances;
  /// Most recent evaluation gap for this level, NaN when unknown.
  double gap = std::numeric_limits<double>::quiet_NaN();
};

/// Supplies the batch for an iteration; nullopt ends training early.
using LevelProvider = std::function<std::optional<TrainingBatch>(int iteration)>;
/// Called before the batch of every iteration divisible by eval_every.
using EvalHook = std::function<void(int iteration, const PolicyNet& net)>;

struct TrainResult {
  std::vector<IterationMetrics> metrics;
  int iterations_run = 0;
  bool aborted = false;
  std::string abort_reason;
};

/// REINFORCE with a learned baseline. Each iteration samples rollouts on the
/// provided batch, then takes one Adam step on the combined actor + critic
/// loss. Parameters stay at the last good state when a numeric error aborts.
TrainResult train(PolicyNet& net, const TrainConfig& config, const LevelProvider& provider,
                  const EvalHook& eval_hook = {});

/// Metrics as CSV `iteration,level,mean_makespan,mean_gap,critic_loss`.
std::string metrics_csv(const std::vector<IterationMetrics>& metrics);

}  // namespace jsp

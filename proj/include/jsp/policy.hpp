#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <vector>

#include "jsp/env.hpp"
#include "jsp/nncore.hpp"

namespace jsp {

struct PolicyConfig {
  int embed_dim = 64;
  int set2set_steps = 3;
  int static_feature_dim = 3;
  int dynamic_feature_dim = 4;

  void validate() const;
  friend bool operator==(const PolicyConfig&, const PolicyConfig&) = default;
};

struct PolicyOutput {
  std::vector<float> probs;  // per job; exactly 0 for finished jobs
  float value = 0.0f;        // baseline estimate in time units
};

using StaticFeature = std::array<float, 3>;
using DynamicFeature = std::array<float, 4>;

/// Per remaining operation j of `job` (from next_op to m-1):
/// (duration / 99, load of its machine / total work, (m - j) / m).
std::vector<StaticFeature> static_features(const Instance& inst, const ScheduleState& state, int job);

/// (job_ready - min ready over unfinished jobs) / scale,
/// (free time of the next op's machine - min machine free time) / scale,
/// remaining work / total work, remaining ops / m;
/// scale = max(longest job, partial makespan).
DynamicFeature dynamic_features(const Instance& inst, const ScheduleState& state, int job);

/// Tape nodes of one policy evaluation.
struct PolicyGraph {
  nn::Var logits;                  // [n], 0 for finished jobs
  nn::Var value;                   // scalar, time units
  std::vector<std::uint8_t> mask;  // 1 for unfinished jobs
};

/// Size-agnostic actor-critic. Static branch: a reverse LSTM over each job's
/// remaining operations, pooled across jobs with set2set. Dynamic branch: the
/// per-job state features. Actor: per-job MLP on (job embedding, dynamic
/// features, global readout) giving one logit per job. Critic: MLP on
/// (global readout, mean dynamic features), scaled by the instance lower bound.
///
/// The critic reads a detached copy of the global readout, so critic-loss
/// gradients reach only `critic.*` parameters.
class PolicyNet {
 public:
  explicit PolicyNet(PolicyConfig config = {}, std::uint64_t seed = 0);

  const PolicyConfig& config() const noexcept { return config_; }
  nn::ParamStore& params() noexcept { return params_; }
  const nn::ParamStore& params() const noexcept { return params_; }

  /// Hidden state after running the encoder from the last feature back to the first.
  nn::Var encode_job(nn::Tape& tape, std::span<const StaticFeature> features) const;

  /// encodings[i][j]: embedding of job i when its next operation is j; one
  /// reverse pass per job yields all of them.
  std::vector<std::vector<nn::Var>> encode_instance(nn::Tape& tape, const Instance& inst) const;

  PolicyGraph build(nn::Tape& tape, const Instance& inst, const ScheduleState& state,
                    const std::vector<std::vector<nn::Var>>& encodings) const;

  /// One-shot evaluation. Throws ContractError on a terminal state.
  PolicyOutput forward(const Instance& inst, const ScheduleState& state) const;

  void save(std::ostream& out) const;
  /// Throws ContractError when the stored parameters do not fit the stored config.
  static PolicyNet load(std::istream& in);
  void save_file(const std::string& path) const;
  static PolicyNet load_file(const std::string& path);

 private:
  PolicyConfig config_;
  nn::ParamStore params_;
};

/// Evaluates many states of one instance, reusing the job encodings. Not
/// thread-safe; use one per thread. The network must outlive it.
class PolicyEvaluator {
 public:
  PolicyEvaluator(const PolicyNet& net, const Instance& inst);

  PolicyOutput evaluate(const ScheduleState& state);

 private:
  const PolicyNet* net_;
  const Instance* inst_;
  std::unique_ptr<nn::Tape> tape_;
  std::vector<std::vector<nn::Var>> encodings_;
  std::size_t mark_ = 0;
};

}  // namespace jsp

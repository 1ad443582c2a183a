#include "jsp/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include <fmt/format.h>

#include "jsp/error.hpp"

namespace jsp {

void TrainConfig::validate() const {
  if (batch_size < 1 || iterations < 0 || eval_every < 1) {
    throw ContractError("batch_size and eval_every must be >= 1, iterations >= 0");
  }
  if (!(lr > 0.0f)) throw ContractError("learning rate must be positive");
  if (clip_norm && !(*clip_norm > 0.0)) throw ContractError("clip norm must be positive");
}

namespace {

EpisodeGraph run_episode(const PolicyNet& net, const Instance& inst,
                         const std::function<int(const std::vector<float>&, const ScheduleState&)>& choose) {
  EpisodeGraph g;
  g.tape = std::make_unique<nn::Tape>(net.params());
  auto& tape = *g.tape;
  const auto encodings = net.encode_instance(tape, inst);
  auto state = ScheduleState::initial(inst);
  g.trace.steps.reserve(inst.n_ops());
  while (state.step < inst.n_ops()) {
    const auto pg = net.build(tape, inst, state, encodings);
    auto logits = tape.value(pg.logits);
    for (float z : logits) {
      if (!std::isfinite(z)) throw NumericError("non-finite actor logit during rollout");
    }
    const float value = tape.scalar(pg.value);
    if (!std::isfinite(value)) throw NumericError("non-finite critic value during rollout");
    const auto probs = nn::masked_softmax(logits, pg.mask);
    const int action = choose(probs, state);
    const nn::Var lp = tape.masked_log_softmax_at(pg.logits, pg.mask, action);

    EpisodeStep step;
    step.state = state;
    step.action = action;
    step.log_prob = tape.scalar(lp);
    step.value = value;
    step.reward = apply_action(state, inst, action);
    g.trace.steps.push_back(std::move(step));
    g.log_probs.push_back(lp);
    g.values.push_back(pg.value);
  }
  g.trace.makespan = state.partial_makespan;
  return g;
}

}  // namespace

EpisodeGraph record_episode(const PolicyNet& net, const Instance& inst, ActionMode mode,
                            std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  return run_episode(net, inst, [&](const std::vector<float>& probs, const ScheduleState& state) {
    int best = -1;
    if (mode == ActionMode::Greedy) {
      for (int i = 0; i < static_cast<int>(probs.size()); ++i) {
        if (!state.finished(i) && (best < 0 || probs[i] > probs[best])) best = i;
      }
      return best;
    }
    double u = unit(rng);
    for (int i = 0; i < static_cast<int>(probs.size()); ++i) {
      if (state.finished(i) || probs[i] <= 0.0f) continue;
      best = i;
      if (u < probs[i]) break;
      u -= probs[i];
    }
    return best;
  });
}

EpisodeGraph record_episode(const PolicyNet& net, const Instance& inst, std::span<const int> actions) {
  if (static_cast<int>(actions.size()) != inst.n_ops()) {
    throw ContractError("record_episode needs exactly n*m actions");
  }
  std::size_t t = 0;
  return run_episode(net, inst, [&](const std::vector<float>&, const ScheduleState&) { return actions[t++]; });
}

std::vector<double> returns(const EpisodeTrace& trace) {
  std::vector<double> g(trace.steps.size());
  double acc = 0.0;
  for (std::size_t t = trace.steps.size(); t-- > 0;) {
    acc += static_cast<double>(trace.steps[t].reward);
    g[t] = acc;
  }
  return g;
}

nn::Var actor_surrogate(EpisodeGraph& graph, int batch_size) {
  const auto g = returns(graph.trace);
  std::vector<float> coeffs(g.size());
  for (std::size_t t = 0; t < g.size(); ++t) {
    coeffs[t] = static_cast<float>((g[t] - graph.trace.steps[t].value) / batch_size);
  }
  return graph.tape->weighted_sum(graph.log_probs, coeffs);
}

nn::Var critic_objective(EpisodeGraph& graph, int batch_size) {
  const auto g = returns(graph.trace);
  auto& tape = *graph.tape;
  std::vector<nn::Var> terms;
  terms.reserve(g.size());
  for (std::size_t t = 0; t < g.size(); ++t) {
    terms.push_back(tape.squared_error(graph.values[t], static_cast<float>(g[t])));
  }
  std::vector<float> coeffs(terms.size(), 1.0f / static_cast<float>(batch_size));
  return tape.weighted_sum(terms, coeffs);
}

nn::Gradients policy_gradient(std::span<EpisodeGraph> batch) {
  if (batch.empty()) throw ContractError("policy_gradient needs at least one episode");
  const int b = static_cast<int>(batch.size());
  nn::Gradients total(batch.front().tape->param_grads().slots());
  for (auto& graph : batch) {
    for (const auto& step : graph.trace.steps) {
      if (!std::isfinite(step.log_prob)) throw NumericError("non-finite log-probability");
    }
    const nn::Var loss = actor_surrogate(graph, b);
    graph.tape->backward(loss);
    total.add(graph.tape->take_param_grads(), -1.0f);
  }
  return total;
}

CriticLoss critic_loss(std::span<EpisodeGraph> batch) {
  if (batch.empty()) throw ContractError("critic_loss needs at least one episode");
  const int b = static_cast<int>(batch.size());
  CriticLoss out;
  out.grads = nn::Gradients(batch.front().tape->param_grads().slots());
  for (auto& graph : batch) {
    const nn::Var loss = critic_objective(graph, b);
    out.loss += graph.tape->scalar(loss);
    graph.tape->backward(loss);
    out.grads.add(graph.tape->take_param_grads());
  }
  return out;
}

namespace {

struct EpisodeOutcome {
  nn::Gradients grads;
  Time makespan = 0;
  double critic_loss = 0.0;
};

EpisodeOutcome train_episode(const PolicyNet& net, const Instance& inst, int batch_size,
                             float critic_weight, std::uint64_t seed, int iteration, int index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(iteration), static_cast<std::uint32_t>(index)};
  std::mt19937_64 rng(seq);
  auto graph = record_episode(net, inst, ActionMode::Sample, rng);
  auto& tape = *graph.tape;
  const nn::Var actor = actor_surrogate(graph, batch_size);
  const nn::Var critic = critic_objective(graph, batch_size);
  const std::vector<nn::Var> parts{actor, critic};
  const std::vector<float> weights{1.0f, critic_weight};
  const nn::Var loss = tape.weighted_sum(parts, weights);
  tape.backward(loss);
  return {tape.take_param_grads(), graph.trace.makespan, tape.scalar(critic)};
}

}  // namespace

TrainResult train(PolicyNet& net, const TrainConfig& config, const LevelProvider& provider,
                  const EvalHook& eval_hook) {
  config.validate();
  TrainResult result;
  const nn::AdamConfig adam{config.lr, 0.9f, 0.999f, 1e-8f};
  int threads = config.threads > 0 ? config.threads
                                   : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

  for (int it = 0; it < config.iterations; ++it) {
    if (eval_hook && it % config.eval_every == 0) eval_hook(it, net);
    auto batch = provider(it);
    if (!batch) break;
    const int b = static_cast<int>(batch->instances.size());
    if (b == 0) throw ContractError("provider returned an empty batch");

    std::vector<EpisodeOutcome> outcomes(b);
    try {
      const int workers = std::min(threads, b);
      if (workers <= 1) {
        for (int k = 0; k < b; ++k) {
          outcomes[k] = train_episode(net, batch->instances[k], b, config.critic_weight, config.seed, it, k);
        }
      } else {
        std::vector<std::exception_ptr> errors(workers);
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) {
          pool.emplace_back([&, w] {
            try {
              for (int k = w; k < b; k += workers) {
                outcomes[k] = train_episode(net, batch->instances[k], b, config.critic_weight,
                                            config.seed, it, k);
              }
            } catch (...) {
              errors[w] = std::current_exception();
            }
          });
        }
        for (auto& t : pool) t.join();
        for (auto& e : errors) {
          if (e) std::rethrow_exception(e);
        }
      }

      nn::Gradients total(net.params().size());
      IterationMetrics m;
      m.iteration = it;
      m.level = batch->level;
      m.mean_gap = batch->gap;
      for (auto& o : outcomes) {
        total.add(o.grads);
        m.mean_makespan += static_cast<double>(o.makespan);
        m.critic_loss += o.critic_loss;
      }
      m.mean_makespan /= b;
      if (config.clip_norm) total.clip_global_norm(*config.clip_norm);
      nn::adam_step(net.params(), total, adam);
      result.metrics.push_back(m);
      result.iterations_run = it + 1;
    } catch (const NumericError& e) {
      result.aborted = true;
      result.abort_reason = fmt::format("iteration {}: {}", it, e.what());
      break;
    }
  }
  return result;
}

std::string metrics_csv(const std::vector<IterationMetrics>& metrics) {
  std::string out = "iteration,level,mean_makespan,mean_gap,critic_loss\n";
  for (const auto& m : metrics) {
    out += fmt::format("{},{},{:.3f},{},{:.6g}\n", m.iteration, m.level, m.mean_makespan,
                       std::isnan(m.mean_gap) ? std::string() : fmt::format("{:.2f}", m.mean_gap),
                       m.critic_loss);
  }
  return out;
}

}  // namespace jsp

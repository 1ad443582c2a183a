#include "jsp/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "jsp/error.hpp"

namespace jsp {

void PolicyConfig::validate() const {
  if (embed_dim < 1 || set2set_steps < 1) throw ContractError("policy config values must be >= 1");
  if (static_feature_dim != 3 || dynamic_feature_dim != 4) {
    throw ContractError("policy feature dimensions are fixed at 3 (static) and 4 (dynamic)");
  }
}

namespace {

void require_unfinished(const Instance& inst, const ScheduleState& state, int job) {
  if (job < 0 || job >= inst.n_jobs() || state.next_op[job] >= inst.n_machines()) {
    throw ContractError("job " + std::to_string(job) + " is finished or out of range");
  }
}

StaticFeature op_feature(const Instance& inst, int job, int j) {
  const auto& op = inst.op(job, j);
  const int m = inst.n_machines();
  return {static_cast<float>(static_cast<double>(op.duration) / 99.0),
          static_cast<float>(static_cast<double>(inst.machine_load(op.machine)) /
                             static_cast<double>(inst.total_work())),
          static_cast<float>(static_cast<double>(m - j) / static_cast<double>(m))};
}

}  // namespace

std::vector<StaticFeature> static_features(const Instance& inst, const ScheduleState& state, int job) {
  require_unfinished(inst, state, job);
  std::vector<StaticFeature> out;
  for (int j = state.next_op[job]; j < inst.n_machines(); ++j) out.push_back(op_feature(inst, job, j));
  return out;
}

DynamicFeature dynamic_features(const Instance& inst, const ScheduleState& state, int job) {
  require_unfinished(inst, state, job);
  const int m = inst.n_machines();
  Time min_ready = -1;
  for (int i = 0; i < inst.n_jobs(); ++i) {
    if (state.finished(i)) continue;
    if (min_ready < 0 || state.job_ready[i] < min_ready) min_ready = state.job_ready[i];
  }
  const Time min_free = *std::min_element(state.machine_free.begin(), state.machine_free.end());
  const double scale = static_cast<double>(std::max(inst.max_job_work(), state.partial_makespan));
  const int next = state.next_op[job];
  const int machine = inst.op(job, next).machine;
  Time remaining = 0;
  for (int j = next; j < m; ++j) remaining += inst.op(job, j).duration;
  return {static_cast<float>(static_cast<double>(state.job_ready[job] - min_ready) / scale),
          static_cast<float>(static_cast<double>(state.machine_free[machine] - min_free) / scale),
          static_cast<float>(static_cast<double>(remaining) / static_cast<double>(inst.total_work())),
          static_cast<float>(static_cast<double>(m - next) / static_cast<double>(m))};
}

PolicyNet::PolicyNet(PolicyConfig config, std::uint64_t seed) : config_(config) {
  config_.validate();
  std::mt19937_64 rng(seed);
  const int d = config_.embed_dim;
  nn::add_lstm_params(params_, "encoder", config_.static_feature_dim, d, rng);
  nn::add_lstm_params(params_, "set2set", 2 * d, d, rng);
  nn::add_dense_params(params_, "actor.hidden", d + config_.dynamic_feature_dim + 2 * d, d, rng);
  nn::add_dense_params(params_, "actor.out", d, 1, rng);
  nn::add_dense_params(params_, "critic.hidden", 2 * d + config_.dynamic_feature_dim, d, rng);
  nn::add_dense_params(params_, "critic.out", d, 1, rng);
}

nn::Var PolicyNet::encode_job(nn::Tape& tape, std::span<const StaticFeature> features) const {
  if (features.empty()) throw ContractError("encode_job: empty feature sequence");
  const auto w = nn::lstm_weights(tape, "encoder");
  nn::LstmState s{tape.zeros(config_.embed_dim), tape.zeros(config_.embed_dim)};
  for (auto it = features.rbegin(); it != features.rend(); ++it) {
    s = tape.lstm_cell(tape.constant({(*it)[0], (*it)[1], (*it)[2]}), s, w);
  }
  return s.h;
}

std::vector<std::vector<nn::Var>> PolicyNet::encode_instance(nn::Tape& tape, const Instance& inst) const {
  const auto w = nn::lstm_weights(tape, "encoder");
  const int m = inst.n_machines();
  std::vector<std::vector<nn::Var>> out(inst.n_jobs(), std::vector<nn::Var>(m));
  const nn::Var zero = tape.zeros(config_.embed_dim);
  for (int i = 0; i < inst.n_jobs(); ++i) {
    nn::LstmState s{zero, zero};
    for (int j = m - 1; j >= 0; --j) {
      const auto f = op_feature(inst, i, j);
      s = tape.lstm_cell(tape.constant({f[0], f[1], f[2]}), s, w);
      out[i][j] = s.h;
    }
  }
  return out;
}

PolicyGraph PolicyNet::build(nn::Tape& tape, const Instance& inst, const ScheduleState& state,
                             const std::vector<std::vector<nn::Var>>& encodings) const {
  const int n = inst.n_jobs();
  PolicyGraph g;
  g.mask.assign(n, 0);
  std::vector<int> open;
  std::vector<nn::Var> embeddings;
  for (int i = 0; i < n; ++i) {
    if (state.finished(i)) continue;
    g.mask[i] = 1;
    open.push_back(i);
    embeddings.push_back(encodings[i][state.next_op[i]]);
  }
  if (open.empty()) throw ContractError("policy forward on a terminal state");

  const nn::Var global =
      nn::set2set(tape, embeddings, {nn::lstm_weights(tape, "set2set")}, config_.set2set_steps);

  const nn::Var aw = tape.param("actor.hidden.w");
  const nn::Var ab = tape.param("actor.hidden.b");
  const nn::Var ow = tape.param("actor.out.w");
  const nn::Var ob = tape.param("actor.out.b");
  const nn::Var zero = tape.zeros(1);
  std::vector<nn::Var> logits(n, zero);
  std::array<std::vector<float>, 4> dyn_columns;
  for (std::size_t k = 0; k < open.size(); ++k) {
    const auto dyn = dynamic_features(inst, state, open[k]);
    for (int c = 0; c < 4; ++c) dyn_columns[c].push_back(dyn[c]);
    const nn::Var x = tape.concat({embeddings[k], tape.constant({dyn[0], dyn[1], dyn[2], dyn[3]}), global});
    logits[open[k]] = tape.dense(tape.tanh(tape.dense(x, aw, ab)), ow, ob);
  }
  g.logits = tape.concat(logits);

  const float count = static_cast<float>(open.size());
  std::vector<float> mean_dyn(4);
  for (int c = 0; c < 4; ++c) mean_dyn[c] = nn::canonical_sum(std::move(dyn_columns[c])) / count;
  auto gv = tape.value(global);
  std::vector<float> critic_in(gv.begin(), gv.end());
  critic_in.insert(critic_in.end(), mean_dyn.begin(), mean_dyn.end());
  const nn::Var hidden = tape.tanh(tape.dense(tape.constant(std::move(critic_in)),
                                              tape.param("critic.hidden.w"),
                                              tape.param("critic.hidden.b")));
  const nn::Var raw = tape.dense(hidden, tape.param("critic.out.w"), tape.param("critic.out.b"));
  g.value = tape.scale(raw, static_cast<float>(lower_bound(inst)));
  return g;
}

namespace {

void check_finite(std::span<const float> values, const char* what) {
  for (float v : values) {
    if (!std::isfinite(v)) throw NumericError(std::string("non-finite ") + what);
  }
}

}  // namespace

PolicyOutput PolicyNet::forward(const Instance& inst, const ScheduleState& state) const {
  PolicyEvaluator eval(*this, inst);
  return eval.evaluate(state);
}

PolicyEvaluator::PolicyEvaluator(const PolicyNet& net, const Instance& inst)
    : net_(&net), inst_(&inst), tape_(std::make_unique<nn::Tape>(net.params())) {
  encodings_ = net.encode_instance(*tape_, inst);
  mark_ = tape_->mark();
}

PolicyOutput PolicyEvaluator::evaluate(const ScheduleState& state) {
  auto g = net_->build(*tape_, *inst_, state, encodings_);
  PolicyOutput out;
  auto logits = tape_->value(g.logits);
  check_finite(logits, "actor logits");
  out.probs = nn::masked_softmax(logits, g.mask);
  out.value = tape_->scalar(g.value);
  if (!std::isfinite(out.value)) throw NumericError("non-finite critic value");
  tape_->truncate(mark_);
  return out;
}

// --- checkpoints ----------------------------------------------------------------

namespace {
constexpr const char* kConfigRecord = "__config__";
}

void PolicyNet::save(std::ostream& out) const {
  std::vector<nn::CheckpointRecord> records;
  nn::Tensor cfg({4});
  cfg.data = {static_cast<float>(config_.embed_dim), static_cast<float>(config_.set2set_steps),
              static_cast<float>(config_.static_feature_dim),
              static_cast<float>(config_.dynamic_feature_dim)};
  records.push_back({kConfigRecord, std::move(cfg)});
  for (int s = 0; s < params_.size(); ++s) records.push_back({params_.name(s), params_.value(s)});
  nn::write_checkpoint(out, records);
}

PolicyNet PolicyNet::load(std::istream& in) {
  auto records = nn::read_checkpoint(in);
  if (records.empty() || records.front().name != kConfigRecord || records.front().tensor.size() != 4) {
    throw ContractError("checkpoint has no policy config record");
  }
  const auto& c = records.front().tensor.data;
  PolicyConfig config{static_cast<int>(c[0]), static_cast<int>(c[1]), static_cast<int>(c[2]),
                      static_cast<int>(c[3])};
  PolicyNet net(config, 0);
  if (static_cast<int>(records.size()) - 1 != net.params_.size()) {
    throw ContractError("checkpoint parameter count does not match its config");
  }
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (!net.params_.contains(rec.name)) {
      throw ContractError("checkpoint parameter '" + rec.name + "' is not part of the network");
    }
    auto& dst = net.params_.value(net.params_.slot(rec.name));
    if (dst.shape != rec.tensor.shape) {
      throw ContractError("checkpoint parameter '" + rec.name + "' has the wrong shape for its config");
    }
    dst = rec.tensor;
  }
  return net;
}

void PolicyNet::save_file(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  save(out);
}

PolicyNet PolicyNet::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open " + path);
  return load(in);
}

}  // namespace jsp

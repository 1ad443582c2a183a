#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace jsp::nn {

/// Dense row-major float tensor.
struct Tensor {
  std::vector<int> shape;
  std::vector<float> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> dims, float fill = 0.0f);

  std::size_t size() const noexcept { return data.size(); }
  int rank() const noexcept { return static_cast<int>(shape.size()); }

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

std::size_t element_count(const std::vector<int>& shape);

/// Named parameters with their Adam moments. Insertion order is preserved
/// and defines the checkpoint record order.
class ParamStore {
 public:
  int add(std::string name, Tensor value);

  int size() const noexcept { return static_cast<int>(values_.size()); }
  /// Throws NotFoundError for unknown names.
  int slot(std::string_view name) const;
  bool contains(std::string_view name) const;

  const std::string& name(int slot) const { return names_.at(slot); }
  const Tensor& value(int slot) const { return values_.at(slot); }
  Tensor& value(int slot) { return values_.at(slot); }
  const Tensor& value(std::string_view name) const { return values_[slot(name)]; }

  Tensor& first_moment(int slot) { return m_.at(slot); }
  Tensor& second_moment(int slot) { return v_.at(slot); }
  std::int64_t adam_steps() const noexcept { return t_; }
  void set_adam_steps(std::int64_t t) noexcept { t_ = t; }

  std::size_t parameter_count() const;

  /// Values only; moments are ignored.
  bool same_values(const ParamStore& other) const;

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  std::int64_t t_ = 0;
};

/// Per-slot gradient buffers matching a ParamStore. Empty buffers mean zero.
class Gradients {
 public:
  Gradients() = default;
  explicit Gradients(int slots) : g_(slots) {}

  int slots() const noexcept { return static_cast<int>(g_.size()); }
  bool has(int slot) const { return !g_.at(slot).empty(); }
  std::vector<float>& at(int slot) { return g_.at(slot); }
  const std::vector<float>& at(int slot) const { return g_.at(slot); }
  /// Allocates a zero buffer of `size` on first use.
  std::vector<float>& ensure(int slot, std::size_t size);

  void add(const Gradients& other, float scale = 1.0f);
  void scale(float factor);
  double global_norm() const;
  /// Rescales so the global norm is at most `max_norm`; returns the pre-clip norm.
  double clip_global_norm(double max_norm);

 private:
  std::vector<std::vector<float>> g_;
};

/// Handle to a node on a Tape.
struct Var {
  int id = -1;
  bool valid() const noexcept { return id >= 0; }
};

struct LstmWeights {
  Var input;   // [in x 4h], gate blocks ordered input, forget, candidate, output
  Var hidden;  // [h x 4h]
  Var bias;    // [4h]
};

struct LstmState {
  Var h;
  Var c;
};

struct Set2SetWeights {
  LstmWeights query;  // input 2h, hidden h
};

/// Reverse-mode autodiff tape. Each primitive records its own backward.
/// Parameters are read by reference from the ParamStore, which must not be
/// modified while the tape is alive; parameter gradients accumulate into a
/// tape-local Gradients buffer so several tapes can run concurrently.
class Tape {
 public:
  explicit Tape(const ParamStore& store);
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var param(int slot);
  Var param(std::string_view name);
  Var constant(std::vector<float> values);
  Var zeros(int size);

  std::span<const float> value(Var v) const;
  float scalar(Var v) const;
  const std::vector<int>& shape(Var v) const;
  /// Gradient of the last backward() root w.r.t. v (empty when v took no part).
  std::span<const float> grad(Var v) const;

  // --- primitives ---------------------------------------------------------
  /// y = x W + b with x [k], W [k x n], b [n].
  Var dense(Var x, Var weight, Var bias);
  Var tanh(Var x);
  Var relu(Var x);
  Var concat(std::span<const Var> parts);
  Var concat(std::initializer_list<Var> parts) { return concat(std::span<const Var>(parts.begin(), parts.size())); }
  Var add(Var a, Var b);
  Var scale(Var x, float factor);
  /// (x - target)^2 for a scalar x.
  Var squared_error(Var x, float target);
  /// Sum of coeff[i] * x[i] over scalars.
  Var weighted_sum(std::span<const Var> scalars, std::span<const float> coeffs);
  /// Standard LSTM cell.
  LstmState lstm_cell(Var x, LstmState prev, const LstmWeights& w);
  /// Dot-product attention readout sum_i softmax(q . m_i) m_i. The result is
  /// bit-identical under any permutation of `memory`.
  Var attention_readout(Var query, std::span<const Var> memory);
  /// log softmax(logits)[action] over unmasked entries (mask[i] != 0 means legal).
  Var masked_log_softmax_at(Var logits, std::span<const std::uint8_t> mask, int action);

  /// Seeds d(root) = 1 for a scalar root and propagates to every node.
  void backward(Var root);

  const Gradients& param_grads() const noexcept { return param_grads_; }
  Gradients take_param_grads();

  std::size_t mark() const noexcept { return nodes_.size(); }
  /// Drops every node created after `mark` (inference scratch).
  void truncate(std::size_t mark);
  std::size_t node_count() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    std::vector<int> shape;
    std::vector<float> value;
    std::vector<float> grad;
    int param_slot = -1;
    int paired = -1;  // second output of a two-output primitive
    bool needs_grad = false;
    std::function<void(Tape&)> backward;
  };

  Var push(std::vector<int> shape, std::vector<float> value, bool needs_grad);
  std::vector<float>& grad_buffer(int id);
  bool needs(Var v) const { return nodes_[v.id].needs_grad; }

  const ParamStore* store_;
  std::vector<Node> nodes_;
  std::vector<int> param_nodes_;  // slot -> node id or -1
  Gradients param_grads_;
};

/// Softmax over unmasked entries; masked entries are exactly 0. Sums use a
/// value-sorted order so the result permutes exactly with its input.
/// Throws ContractError when every entry is masked.
std::vector<float> masked_softmax(std::span<const float> logits, std::span<const std::uint8_t> mask);

/// Order-independent float sum (ascending value order).
float canonical_sum(std::vector<float> values);

/// set2set over `elements` (each [h]): `steps` rounds of query LSTM,
/// attention readout, and concatenation. Returns the final [2h] query.
Var set2set(Tape& tape, std::span<const Var> elements, const Set2SetWeights& weights, int steps);

struct AdamConfig {
  float lr = 1e-4f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
};

/// One bias-corrected Adam update on every slot that has a gradient.
/// Throws NumericError naming the first parameter with a non-finite gradient;
/// the store is left untouched in that case.
void adam_step(ParamStore& store, const Gradients& grads, const AdamConfig& config = {});

// --- initialisation ---------------------------------------------------------
/// uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for [fan_in x fan_out].
Tensor uniform_weight(int fan_in, int fan_out, std::mt19937_64& rng);

/// Registers `prefix.wx`, `prefix.wh`, `prefix.b` with forget-gate bias 1.
void add_lstm_params(ParamStore& store, const std::string& prefix, int input, int hidden,
                     std::mt19937_64& rng);
/// Registers `prefix.w`, `prefix.b`.
void add_dense_params(ParamStore& store, const std::string& prefix, int input, int output,
                      std::mt19937_64& rng);

LstmWeights lstm_weights(Tape& tape, const std::string& prefix);

// --- checkpoints --------------------------------------------------------------
struct CheckpointRecord {
  std::string name;
  Tensor tensor;
};

/// Little-endian: magic "JSPN", u32 version, u32 record count, then per record
/// u32 name_len, name bytes, u32 rank, u32 dims[rank], f32 data.
void write_checkpoint(std::ostream& out, const std::vector<CheckpointRecord>& records);
std::vector<CheckpointRecord> read_checkpoint(std::istream& in);

inline constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace jsp::nn

#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "jsp/instance.hpp"
#include "jsp/policy.hpp"
#include "jsp/trainer.hpp"

namespace jsp {

enum class CurriculumKind { None, Icl, Ucl, Ascl, Rascl };

std::string_view curriculum_name(CurriculumKind kind);
std::optional<CurriculumKind> curriculum_from_name(std::string_view name);

struct CurriculumParams {
  int u = 100;             // gap check period
  int b = 100;             // resampling period
  double t_opt = 10.0;     // gap threshold, percent
  int patience = 3000;     // iterations without advancing before stepping back
  int iters_per_level = 0; // ICL budget per level
};

/// `level` is the frontier l; `train_level` is the level actually trained on
/// (they differ only when RASCL resamples an easier level).
struct CurriculumState {
  int n_levels = 1;
  int level = 0;
  int train_level = 0;
  std::vector<double> gaps;
  int iter = 0;
  int last_advance_iter = 0;
  bool done = false;
  CurriculumParams params;

  static CurriculumState initial(int n_levels, const CurriculumParams& params);
};

enum class LevelEvent { None, Advance, Stay, Back, Sample, Finish };
std::string_view event_name(LevelEvent event);

struct LevelDecision {
  int level = 0;  // level to train on this iteration
  LevelEvent event = LevelEvent::None;
};

// Each call decides iteration `state.iter` and then increments it.

/// Fixed budget per level, ascending, never revisits; Finish after the last.
LevelDecision next_level_icl(CurriculumState& state);
/// Uniform over all levels every iteration.
LevelDecision next_level_ucl(CurriculumState& state, std::mt19937_64& rng);
/// Every u iterations: advance when g[l] <= t_opt, step back after `patience`
/// iterations without an advance, otherwise stay.
LevelDecision next_level_ascl(CurriculumState& state);
/// ASCL's advance/patience rule; when the threshold is unmet at a check that
/// also falls on the b-period, the training level is drawn among visited
/// levels with probability proportional to their gaps.
LevelDecision next_level_rascl(CurriculumState& state, std::mt19937_64& rng);

/// p(l') = g[l'] / sum_{l'' <= l} g[l''] for l' <= l, zero above the frontier.
std::vector<double> rascl_probabilities(const CurriculumState& state);

struct LevelLogEntry {
  int iteration = 0;
  LevelEvent event = LevelEvent::None;
  int level = 0;
  std::vector<double> gaps;
};

class Curriculum {
 public:
  Curriculum(CurriculumKind kind, const CurriculumParams& params, int n_levels, std::uint64_t seed);

  CurriculumKind kind() const noexcept { return kind_; }
  const CurriculumState& state() const noexcept { return state_; }
  void set_gaps(std::vector<double> gaps);

  /// Level to train on at `iteration` (must be called with consecutive
  /// iterations from 0); nullopt once the strategy has finished.
  std::optional<int> level_for(int iteration);

  const std::vector<LevelLogEntry>& log() const noexcept { return log_; }
  /// CSV `iteration,event,level,gaps...` with one gap column per level.
  std::string log_csv() const;

 private:
  CurriculumKind kind_;
  CurriculumState state_;
  std::mt19937_64 rng_;
  std::vector<LevelLogEntry> log_;
};

struct LevelSize {
  int n = 0;
  int m = 0;
  std::string label() const { return std::to_string(n) + "x" + std::to_string(m); }
  friend bool operator==(const LevelSize&, const LevelSize&) = default;
};

std::vector<LevelSize> desk_ladder();
std::vector<LevelSize> benchmark_ladder();
/// "desk", "benchmark", or a comma list such as "3x3,4x4,6x6".
std::optional<std::vector<LevelSize>> parse_ladder(std::string_view text);

struct LadderLevel {
  LevelSize size;
  std::vector<Instance> test_set;
  std::vector<Time> reference;
  bool oracle_reference = false;
};

struct Ladder {
  std::vector<LadderLevel> levels;
};

/// Frozen test sets per level. References are exact optima (oracle) when
/// n*m <= 12, else the best deterministic dispatch rule.
Ladder make_ladder(const std::vector<LevelSize>& sizes, int test_per_level, std::uint64_t seed);

/// Mean greedy gap (percent, unclamped) of the policy against the level's references.
double level_gap(const PolicyNet& net, const LadderLevel& level);

/// Per-level mean greedy gap, floored at 0 so the values form a distribution.
/// Throws ContractError if a level has no reference values.
std::vector<double> refresh_gaps(const PolicyNet& net, const Ladder& ladder);

/// Training batches drawn from fresh random instances of the curriculum's
/// current level; reports the level's latest gap.
LevelProvider make_curriculum_provider(Curriculum& curriculum, const Ladder& ladder, int batch_size,
                                       std::uint64_t seed);

/// Gap refresh for ASCL/RASCL every u iterations (no-op for other kinds).
EvalHook make_gap_refresh_hook(Curriculum& curriculum, const Ladder& ladder);

}  // namespace jsp

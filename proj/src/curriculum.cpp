#include "jsp/curriculum.hpp"

#include <algorithm>
#include <charconv>

#include <fmt/format.h>

#include "jsp/error.hpp"
#include "jsp/inference.hpp"
#include "jsp/oracle.hpp"
#include "jsp/pdr.hpp"

namespace jsp {

std::string_view curriculum_name(CurriculumKind kind) {
  switch (kind) {
    case CurriculumKind::None: return "none";
    case CurriculumKind::Icl: return "icl";
    case CurriculumKind::Ucl: return "ucl";
    case CurriculumKind::Ascl: return "ascl";
    case CurriculumKind::Rascl: return "rascl";
  }
  return "?";
}

std::optional<CurriculumKind> curriculum_from_name(std::string_view name) {
  for (auto k : {CurriculumKind::None, CurriculumKind::Icl, CurriculumKind::Ucl, CurriculumKind::Ascl,
                 CurriculumKind::Rascl}) {
    if (curriculum_name(k) == name) return k;
  }
  return std::nullopt;
}

std::string_view event_name(LevelEvent event) {
  switch (event) {
    case LevelEvent::None: return "none";
    case LevelEvent::Advance: return "advance";
    case LevelEvent::Stay: return "stay";
    case LevelEvent::Back: return "back";
    case LevelEvent::Sample: return "sample";
    case LevelEvent::Finish: return "finish";
  }
  return "?";
}

CurriculumState CurriculumState::initial(int n_levels, const CurriculumParams& params) {
  if (n_levels < 1) throw ContractError("curriculum needs at least one level");
  if (params.u < 1 || params.b < 1 || params.patience < 1) {
    throw ContractError("curriculum periods must be >= 1");
  }
  CurriculumState s;
  s.n_levels = n_levels;
  s.gaps.assign(n_levels, 0.0);
  s.params = params;
  return s;
}

LevelDecision next_level_icl(CurriculumState& s) {
  if (s.params.iters_per_level < 1) throw ContractError("ICL needs iters_per_level >= 1");
  const int i = s.iter++;
  const int level = i / s.params.iters_per_level;
  if (level >= s.n_levels) {
    s.done = true;
    return {s.level, LevelEvent::Finish};
  }
  LevelEvent event = LevelEvent::None;
  if (i % s.params.iters_per_level == 0) event = level > s.level ? LevelEvent::Advance : LevelEvent::Stay;
  s.level = s.train_level = level;
  return {level, event};
}

LevelDecision next_level_ucl(CurriculumState& s, std::mt19937_64& rng) {
  ++s.iter;
  std::uniform_int_distribution<int> pick(0, s.n_levels - 1);
  s.train_level = pick(rng);
  s.level = std::max(s.level, s.train_level);
  return {s.train_level, LevelEvent::Sample};
}

namespace {

/// Advance / patience step shared by ASCL and RASCL. Returns None when neither fires.
LevelEvent staircase_check(CurriculumState& s, int i) {
  if (s.gaps.at(s.level) <= s.params.t_opt) {
    if (s.level == s.n_levels - 1) {
      s.done = true;
      return LevelEvent::Finish;
    }
    ++s.level;
    s.last_advance_iter = i;
    s.train_level = s.level;
    return LevelEvent::Advance;
  }
  if (i - s.last_advance_iter >= s.params.patience && s.level > 0) {
    --s.level;
    s.last_advance_iter = i;
    s.train_level = s.level;
    return LevelEvent::Back;
  }
  return LevelEvent::None;
}

}  // namespace

LevelDecision next_level_ascl(CurriculumState& s) {
  const int i = s.iter++;
  if (s.done) return {s.level, LevelEvent::Finish};
  if (i % s.params.u != 0) return {s.train_level, LevelEvent::None};
  const auto event = staircase_check(s, i);
  if (event != LevelEvent::None) return {s.train_level, event};
  s.train_level = s.level;
  return {s.train_level, LevelEvent::Stay};
}

std::vector<double> rascl_probabilities(const CurriculumState& s) {
  std::vector<double> p(s.n_levels, 0.0);
  double total = 0.0;
  for (int l = 0; l <= s.level; ++l) total += std::max(0.0, s.gaps[l]);
  if (total <= 0.0) {
    // Only reachable with a negative threshold; fall back to uniform over visited levels.
    for (int l = 0; l <= s.level; ++l) p[l] = 1.0 / (s.level + 1);
    return p;
  }
  for (int l = 0; l <= s.level; ++l) p[l] = std::max(0.0, s.gaps[l]) / total;
  return p;
}

LevelDecision next_level_rascl(CurriculumState& s, std::mt19937_64& rng) {
  const int i = s.iter++;
  if (s.done) return {s.level, LevelEvent::Finish};
  if (i % s.params.u != 0) return {s.train_level, LevelEvent::None};
  const auto event = staircase_check(s, i);
  if (event != LevelEvent::None) return {s.train_level, event};
  if (i % s.params.b == 0) {
    const auto p = rascl_probabilities(s);
    std::discrete_distribution<int> pick(p.begin(), p.begin() + s.level + 1);
    s.train_level = pick(rng);
    return {s.train_level, LevelEvent::Sample};
  }
  return {s.train_level, LevelEvent::Stay};
}

Curriculum::Curriculum(CurriculumKind kind, const CurriculumParams& params, int n_levels,
                       std::uint64_t seed)
    : kind_(kind), state_(CurriculumState::initial(n_levels, params)), rng_(seed) {
  if (kind == CurriculumKind::None) state_.level = state_.train_level = n_levels - 1;
}

void Curriculum::set_gaps(std::vector<double> gaps) {
  if (static_cast<int>(gaps.size()) != state_.n_levels) throw ContractError("gap array size mismatch");
  for (double g : gaps) {
    if (!(g >= 0.0)) throw ContractError("gaps must be non-negative");
  }
  state_.gaps = std::move(gaps);
}

std::optional<int> Curriculum::level_for(int iteration) {
  if (iteration != state_.iter) throw ContractError("curriculum iterations must be consecutive");
  LevelDecision d;
  switch (kind_) {
    case CurriculumKind::None:
      ++state_.iter;
      d = {state_.level, iteration == 0 ? LevelEvent::Stay : LevelEvent::None};
      break;
    case CurriculumKind::Icl: d = next_level_icl(state_); break;
    case CurriculumKind::Ucl: d = next_level_ucl(state_, rng_); break;
    case CurriculumKind::Ascl: d = next_level_ascl(state_); break;
    case CurriculumKind::Rascl: d = next_level_rascl(state_, rng_); break;
  }
  if (d.event != LevelEvent::None) log_.push_back({iteration, d.event, d.level, state_.gaps});
  if (d.event == LevelEvent::Finish) return std::nullopt;
  return d.level;
}

std::string Curriculum::log_csv() const {
  std::string out = "iteration,event,level";
  for (int l = 0; l < state_.n_levels; ++l) out += fmt::format(",gap{}", l);
  out += '\n';
  for (const auto& e : log_) {
    out += fmt::format("{},{},{}", e.iteration, event_name(e.event), e.level);
    for (double g : e.gaps) out += fmt::format(",{:.2f}", g);
    out += '\n';
  }
  return out;
}

std::vector<LevelSize> desk_ladder() { return {{3, 3}, {4, 4}, {6, 6}, {8, 8}}; }

std::vector<LevelSize> benchmark_ladder() { return {{15, 15}, {20, 15}, {20, 20}, {30, 15}, {30, 20}}; }

std::optional<std::vector<LevelSize>> parse_ladder(std::string_view text) {
  if (text == "desk") return desk_ladder();
  if (text == "benchmark") return benchmark_ladder();
  std::vector<LevelSize> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto comma = text.find(',', start);
    auto item = text.substr(start, comma == std::string_view::npos ? text.npos : comma - start);
    auto x = item.find('x');
    if (x == std::string_view::npos) return std::nullopt;
    LevelSize s;
    auto a = item.substr(0, x);
    auto b = item.substr(x + 1);
    auto r1 = std::from_chars(a.data(), a.data() + a.size(), s.n);
    auto r2 = std::from_chars(b.data(), b.data() + b.size(), s.m);
    if (r1.ec != std::errc() || r1.ptr != a.data() + a.size() || r2.ec != std::errc() ||
        r2.ptr != b.data() + b.size() || s.n < 1 || s.m < 1) {
      return std::nullopt;
    }
    if (std::find(out.begin(), out.end(), s) != out.end()) return std::nullopt;
    out.push_back(s);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (out.empty()) return std::nullopt;
  return out;
}

Ladder make_ladder(const std::vector<LevelSize>& sizes, int test_per_level, std::uint64_t seed) {
  if (sizes.empty() || test_per_level < 1) throw ContractError("ladder needs levels and test instances");
  Ladder ladder;
  for (std::size_t l = 0; l < sizes.size(); ++l) {
    LadderLevel level;
    level.size = sizes[l];
    level.oracle_reference = sizes[l].n * sizes[l].m <= 12;
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x7e57u,
                      static_cast<std::uint32_t>(sizes[l].n), static_cast<std::uint32_t>(sizes[l].m)};
    std::mt19937_64 rng(seq);
    for (int k = 0; k < test_per_level; ++k) {
      auto inst = generate(sizes[l].n, sizes[l].m, rng());
      level.reference.push_back(level.oracle_reference ? solve_exact(inst).makespan
                                                       : best_pdr_makespan(inst));
      level.test_set.push_back(std::move(inst));
    }
    ladder.levels.push_back(std::move(level));
  }
  return ladder;
}

double level_gap(const PolicyNet& net, const LadderLevel& level) {
  if (level.test_set.empty() || level.reference.size() != level.test_set.size()) {
    throw ContractError("level " + level.size.label() + " has no reference values");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < level.test_set.size(); ++k) {
    const auto& inst = level.test_set[k];
    const auto r = decode_greedy(inst, policy_probabilities(net, inst));
    total += gap_percent_raw(static_cast<double>(r.makespan), level.reference[k]);
  }
  return total / static_cast<double>(level.test_set.size());
}

std::vector<double> refresh_gaps(const PolicyNet& net, const Ladder& ladder) {
  std::vector<double> gaps;
  gaps.reserve(ladder.levels.size());
  for (const auto& level : ladder.levels) gaps.push_back(std::max(0.0, level_gap(net, level)));
  return gaps;
}

LevelProvider make_curriculum_provider(Curriculum& curriculum, const Ladder& ladder, int batch_size,
                                       std::uint64_t seed) {
  if (static_cast<int>(ladder.levels.size()) != curriculum.state().n_levels) {
    throw ContractError("ladder and curriculum level counts differ");
  }
  return [&curriculum, &ladder, batch_size, seed](int iteration) -> std::optional<TrainingBatch> {
    auto level = curriculum.level_for(iteration);
    if (!level) return std::nullopt;
    const auto size = ladder.levels[*level].size;
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x7a11u,
                      static_cast<std::uint32_t>(iteration)};
    std::mt19937_64 rng(seq);
    TrainingBatch batch;
    batch.level = *level;
    batch.gap = curriculum.state().gaps[*level];
    for (int k = 0; k < batch_size; ++k) batch.instances.push_back(generate(size.n, size.m, rng()));
    return batch;
  };
}

EvalHook make_gap_refresh_hook(Curriculum& curriculum, const Ladder& ladder) {
  return [&curriculum, &ladder](int iteration, const PolicyNet& net) {
    const auto kind = curriculum.kind();
    if (kind != CurriculumKind::Ascl && kind != CurriculumKind::Rascl) return;
    if (iteration % curriculum.state().params.u != 0) return;
    curriculum.set_gaps(refresh_gaps(net, ladder));
  };
}

}  // namespace jsp

#include "jsp/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "jsp/curriculum.hpp"
#include "jsp/error.hpp"
#include "jsp/inference.hpp"
#include "jsp/oracle.hpp"
#include "jsp/pdr.hpp"
#include "jsp/trainer.hpp"

namespace fs = std::filesystem;

namespace jsp {
namespace {

/// Bad flag values detected after parsing; reported with exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

/// Runs body(i) for i in [0, count) on up to `jobs` threads. Results must be
/// written by index so output order never depends on scheduling.
template <class Body>
void parallel_for(int count, int jobs, Body&& body) {
  const int workers = std::clamp(jobs, 1, std::max(count, 1));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = next++; i < count; i = next++) body(i);
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

/// Orders names like TA2 before TA10.
bool natural_less(const std::string& a, const std::string& b) {
  const auto split = [](const std::string& s) {
    const auto digits = s.find_first_of("0123456789");
    if (digits == std::string::npos || s.find_first_not_of("0123456789", digits) != std::string::npos) {
      return std::pair<std::string, long long>{s, -1};
    }
    return std::pair<std::string, long long>{s.substr(0, digits), std::stoll(s.substr(digits))};
  };
  const auto ka = split(canonical_instance_name(a));
  const auto kb = split(canonical_instance_name(b));
  if (ka != kb) return ka < kb;
  return a < b;
}

struct InputOptions {
  std::string dir;
  std::vector<std::string> files;
  std::string ub_path;
  int jobs = 1;
};

void add_input_options(CLI::App* sub, InputOptions& in, bool ub_required) {
  sub->add_option("--dir", in.dir, "Directory of instance files")->check(CLI::ExistingDirectory);
  sub->add_option("--instance", in.files, "Instance file (repeatable)")->check(CLI::ExistingFile);
  auto* ub = sub->add_option("--ub", in.ub_path, "Upper-bound registry CSV")->check(CLI::ExistingFile);
  if (ub_required) ub->required();
  sub->add_option("--jobs", in.jobs, "Worker threads for per-instance evaluation")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
}

/// Instances sorted by (n, m) and then by natural name order.
std::vector<Instance> load_inputs(const InputOptions& in) {
  std::vector<std::string> paths = in.files;
  if (!in.dir.empty()) {
    std::vector<std::string> found;
    for (const auto& entry : fs::directory_iterator(in.dir)) {
      if (entry.is_regular_file()) found.push_back(entry.path().string());
    }
    std::sort(found.begin(), found.end());
    paths.insert(paths.end(), found.begin(), found.end());
  }
  if (paths.empty()) throw UsageError("no instances given (use --dir or --instance)");
  std::vector<Instance> out;
  for (const auto& p : paths) out.push_back(load_instance(p));
  std::stable_sort(out.begin(), out.end(), [](const Instance& a, const Instance& b) {
    if (a.n_jobs() != b.n_jobs()) return a.n_jobs() < b.n_jobs();
    if (a.n_machines() != b.n_machines()) return a.n_machines() < b.n_machines();
    return natural_less(a.name(), b.name());
  });
  return out;
}

/// Upper bound per instance, or nullopt for every entry without a registry.
std::vector<std::optional<Time>> lookup_bounds(const InputOptions& in, const std::vector<Instance>& insts) {
  std::vector<std::optional<Time>> out(insts.size());
  if (in.ub_path.empty()) return out;
  const auto registry = load_ub_registry(in.ub_path);
  for (std::size_t k = 0; k < insts.size(); ++k) {
    const UbEntry* e = registry.find(insts[k].name());
    if (!e) throw NotFoundError("no upper bound for instance " + insts[k].name());
    if (e->n != insts[k].n_jobs() || e->m != insts[k].n_machines()) {
      throw ContractError("registry size for " + insts[k].name() + " does not match the instance");
    }
    out[k] = e->upper_bound;
  }
  return out;
}

std::string size_label(const Instance& inst) { return fmt::format("{}x{}", inst.n_jobs(), inst.n_machines()); }

/// Resolved configuration as `#`-prefixed comment lines.
std::string config_echo(const CLI::App& sub) {
  std::string out = fmt::format("# jsp {}\n", sub.get_name());
  std::istringstream lines(sub.config_to_str(true, false));
  std::string line;
  while (std::getline(lines, line)) {
    if (!line.empty()) out += "# " + line + "\n";
  }
  return out;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
  if (!f) throw Error("failed writing " + path.string());
}

/// Either stdout or the --output file.
void emit(std::ostream& out, const std::string& path, const std::string& text) {
  if (path.empty()) {
    out << text;
  } else {
    write_file(path, text);
  }
}

std::string format_gap(std::optional<Time> ub, double makespan) {
  return ub ? fmt::format("{:.2f}", gap_percent(makespan, *ub)) : std::string();
}

// ---------------------------------------------------------------------------

struct GenerateOptions {
  int n = 6;
  int m = 6;
  std::uint64_t seed = 1;
  int count = 1;
  std::string out_dir;
};

int cmd_generate(const GenerateOptions& o, std::ostream& out) {
  if (o.count > 1 && o.out_dir.empty()) throw UsageError("--count > 1 needs --out-dir");
  for (int k = 0; k < o.count; ++k) {
    const auto inst = generate(o.n, o.m, o.seed + static_cast<std::uint64_t>(k));
    const std::string text = serialize_standard(inst);
    if (o.out_dir.empty()) {
      out << text;
    } else {
      fs::create_directories(o.out_dir);
      write_file(fs::path(o.out_dir) / fmt::format("g{}x{}_{}.txt", o.n, o.m, o.seed + k), text);
    }
  }
  return 0;
}

struct PdrOptions {
  InputOptions in;
  std::string rules = "spt,fddwkr,mwkr,mopnr";
  std::uint64_t seed = 1;
  std::string output;
};

std::vector<PdrKind> parse_rules(const std::string& text) {
  std::vector<PdrKind> out;
  for (const auto& r : split_list(text)) {
    const auto k = pdr_from_name(r);
    if (!k) throw UsageError("unknown rule '" + r + "' (spt, fddwkr, mwkr, mopnr, random)");
    out.push_back(*k);
  }
  if (out.empty()) throw UsageError("--rules is empty");
  return out;
}

/// Per-size means of `value(instance, column)` over instances of that size.
struct SizeGroup {
  std::string label;
  std::vector<std::size_t> members;
};

std::vector<SizeGroup> size_groups(const std::vector<Instance>& insts) {
  std::vector<SizeGroup> groups;
  for (std::size_t k = 0; k < insts.size(); ++k) {
    const auto label = size_label(insts[k]);
    if (groups.empty() || groups.back().label != label) groups.push_back({label, {}});
    groups.back().members.push_back(k);
  }
  return groups;
}

/// Mean makespan and mean raw gap of one column over one size group.
struct ColumnMean {
  double makespan = 0.0;
  std::optional<double> gap;
};

ColumnMean column_mean(const SizeGroup& g, const std::vector<Time>& makespans,
                       const std::vector<std::optional<Time>>& ubs) {
  ColumnMean c;
  double gap_total = 0.0;
  bool have_gap = true;
  for (auto k : g.members) {
    c.makespan += static_cast<double>(makespans[k]);
    if (ubs[k]) {
      gap_total += gap_percent_raw(static_cast<double>(makespans[k]), *ubs[k]);
    } else {
      have_gap = false;
    }
  }
  const double count = static_cast<double>(g.members.size());
  c.makespan /= count;
  if (have_gap) c.gap = gap_total / count;
  return c;
}

std::string format_mean_gap(const ColumnMean& c) { return c.gap ? fmt::format("{:.2f}", *c.gap) : std::string(); }

/// makespans[rule][instance]
std::vector<std::vector<Time>> run_rules(const std::vector<Instance>& insts, const std::vector<PdrKind>& rules,
                                         std::uint64_t seed, int jobs) {
  std::vector<std::vector<Time>> ms(rules.size(), std::vector<Time>(insts.size()));
  parallel_for(static_cast<int>(insts.size()), jobs, [&](int k) {
    for (std::size_t r = 0; r < rules.size(); ++r) ms[r][k] = pdr_rollout(insts[k], rules[r], seed).makespan;
  });
  return ms;
}

int cmd_pdr(const CLI::App& sub, const PdrOptions& o, std::ostream& out) {
  const auto rules = parse_rules(o.rules);
  const auto insts = load_inputs(o.in);
  const auto ubs = lookup_bounds(o.in, insts);
  const auto ms = run_rules(insts, rules, o.seed, o.in.jobs);

  std::string text = config_echo(sub) + "name,rule,makespan,gap\n";
  for (std::size_t k = 0; k < insts.size(); ++k) {
    for (std::size_t r = 0; r < rules.size(); ++r) {
      text += fmt::format("{},{},{},{}\n", insts[k].name(), pdr_name(rules[r]), ms[r][k],
                          format_gap(ubs[k], static_cast<double>(ms[r][k])));
    }
  }
  for (const auto& g : size_groups(insts)) {
    for (std::size_t r = 0; r < rules.size(); ++r) {
      const auto c = column_mean(g, ms[r], ubs);
      text += fmt::format("mean_{},{},{:.1f},{}\n", g.label, pdr_name(rules[r]), c.makespan, format_mean_gap(c));
    }
  }
  emit(out, o.output, text);
  return 0;
}

struct OracleOptionsCli {
  std::vector<std::string> files;
  std::int64_t budget = OracleOptions{}.node_budget;
  bool no_prune = false;
};

int cmd_oracle(const OracleOptionsCli& o, std::ostream& out) {
  out << "name,makespan,status,nodes\n";
  for (const auto& path : o.files) {
    const auto inst = load_instance(path);
    if (inst.n_ops() > 16) {
      throw UsageError(fmt::format("{} has {} operations; the exact oracle is limited to 16", inst.name(),
                                   inst.n_ops()));
    }
    const auto r = solve_exact(inst, {o.budget, !o.no_prune});
    out << fmt::format("{},{},{},{}\n", inst.name(), r.makespan, r.optimal() ? "optimal" : "budget_exceeded",
                       r.nodes);
  }
  return 0;
}

struct TrainOptions {
  std::string curriculum = "rascl";
  std::string ladder = "desk";
  int iters = 2000;
  int batch = 16;
  float lr = 1e-4f;
  std::uint64_t seed = 1;
  int u = 100;
  int b = 100;
  double t_opt = 10.0;
  int patience = 3000;
  int iters_per_level = 0;
  int test_per_level = 8;
  int embed_dim = 64;
  int set2set_steps = 3;
  int eval_every = 100;
  std::optional<double> clip_norm;
  int jobs = 1;
  std::string out_dir;
};

int cmd_train(const CLI::App& sub, const TrainOptions& o, std::ostream& out,
              std::ostream& err) {
  const auto kind = curriculum_from_name(o.curriculum);
  if (!kind) throw UsageError("unknown curriculum '" + o.curriculum + "' (none, icl, ucl, ascl, rascl)");
  const auto sizes = parse_ladder(o.ladder);
  if (!sizes) throw UsageError("bad ladder '" + o.ladder + "' (desk, benchmark, or a list like 3x3,4x4)");

  CurriculumParams params;
  params.u = o.u;
  params.b = o.b;
  params.t_opt = o.t_opt;
  params.patience = o.patience;
  const int n_levels = static_cast<int>(sizes->size());
  params.iters_per_level = o.iters_per_level > 0 ? o.iters_per_level : (o.iters + n_levels - 1) / n_levels;

  TrainConfig cfg;
  cfg.batch_size = o.batch;
  cfg.lr = o.lr;
  cfg.iterations = o.iters;
  cfg.seed = o.seed;
  cfg.clip_norm = o.clip_norm;
  cfg.threads = o.jobs;
  // The hook below filters on u and eval_every itself, so it runs every iteration.
  cfg.eval_every = 1;
  if (o.eval_every < 1) throw UsageError("--eval-every must be >= 1");
  PolicyConfig pcfg;
  pcfg.embed_dim = o.embed_dim;
  pcfg.set2set_steps = o.set2set_steps;
  try {
    cfg.validate();
    pcfg.validate();
  } catch (const ContractError& e) {
    throw UsageError(e.what());
  }

  const Ladder ladder = make_ladder(*sizes, o.test_per_level, o.seed);
  Curriculum curriculum(*kind, params, n_levels, o.seed);
  const auto provider = make_curriculum_provider(curriculum, ladder, o.batch, o.seed);
  const auto refresh = make_gap_refresh_hook(curriculum, ladder);
  PolicyNet net(pcfg, o.seed);

  fs::create_directories(o.out_dir);
  const fs::path dir(o.out_dir);
  const std::string checkpoint = (dir / "model.ckpt").string();
  const auto hook = [&](int iteration, const PolicyNet& current) {
    if (iteration % o.eval_every == 0) current.save_file(checkpoint);
    refresh(iteration, current);
  };

  const auto result = train(net, cfg, provider, hook);
  net.save_file(checkpoint);
  const std::string echo = config_echo(sub);
  write_file(dir / "metrics.csv", echo + metrics_csv(result.metrics));
  write_file(dir / "levels.csv", echo + curriculum.log_csv());

  std::string summary = "level,size,reference,gap\n";
  for (int l = 0; l < n_levels; ++l) {
    const auto& level = ladder.levels[l];
    summary += fmt::format("{},{},{},{:.2f}\n", l, level.size.label(), level.oracle_reference ? "oracle" : "best_pdr",
                           level_gap(net, level));
  }
  out << fmt::format("# iterations_run={}\n", result.iterations_run) << summary;
  if (result.aborted) {
    err << "training aborted: " << result.abort_reason << " (checkpoint holds the last good parameters)\n";
    return 1;
  }
  return 0;
}

struct EvalOptions {
  InputOptions in;
  std::string checkpoint;
  std::string strategies = "greedy";
  std::uint64_t seed = 1;
  std::string output;
};

std::vector<Strategy> parse_strategies(const std::string& text) {
  std::vector<Strategy> out;
  for (const auto& s : split_list(text)) {
    const auto parsed = parse_strategy(s);
    if (!parsed) throw UsageError("unknown strategy '" + s + "' (greedy, sample:N, pomo:W, beam:K)");
    out.push_back(*parsed);
  }
  if (out.empty()) throw UsageError("--strategies is empty");
  return out;
}

/// makespans[strategy][instance]
std::vector<std::vector<Time>> run_strategies(const PolicyNet& net, const std::vector<Instance>& insts,
                                              const std::vector<Strategy>& strategies, std::uint64_t seed,
                                              int jobs) {
  std::vector<std::vector<Time>> ms(strategies.size(), std::vector<Time>(insts.size()));
  parallel_for(static_cast<int>(insts.size()), jobs, [&](int k) {
    const auto probs = policy_probabilities(net, insts[k]);
    for (std::size_t s = 0; s < strategies.size(); ++s) ms[s][k] = decode(insts[k], probs, strategies[s], seed).makespan;
  });
  return ms;
}

PolicyNet load_checkpoint(const std::string& path) {
  try {
    return PolicyNet::load_file(path);
  } catch (const NotFoundError& e) {
    throw UsageError(e.what());
  }
}

int cmd_eval(const CLI::App& sub, const EvalOptions& o, std::ostream& out) {
  const auto strategies = parse_strategies(o.strategies);
  const auto net = load_checkpoint(o.checkpoint);
  const auto insts = load_inputs(o.in);
  const auto ubs = lookup_bounds(o.in, insts);
  const auto ms = run_strategies(net, insts, strategies, o.seed, o.in.jobs);
  const bool gaps = !o.in.ub_path.empty();

  std::string text = config_echo(sub) + "name,size,ub";
  for (const auto& s : strategies) text += "," + s.name() + (gaps ? "," + s.name() + "_gap" : "");
  text += '\n';
  for (std::size_t k = 0; k < insts.size(); ++k) {
    text += fmt::format("{},{},{}", insts[k].name(), size_label(insts[k]), ubs[k] ? std::to_string(*ubs[k]) : "");
    for (std::size_t s = 0; s < strategies.size(); ++s) {
      text += fmt::format(",{}", ms[s][k]);
      if (gaps) text += "," + format_gap(ubs[k], static_cast<double>(ms[s][k]));
    }
    text += '\n';
  }
  for (const auto& g : size_groups(insts)) {
    text += fmt::format("mean_{},{},", g.label, g.label);
    for (std::size_t s = 0; s < strategies.size(); ++s) {
      const auto c = column_mean(g, ms[s], ubs);
      text += fmt::format(",{:.1f}", c.makespan);
      if (gaps) text += "," + format_mean_gap(c);
    }
    text += '\n';
  }
  emit(out, o.output, text);
  return 0;
}

struct TableOptions {
  InputOptions in;
  std::string rules = "spt,fddwkr,mwkr,mopnr";
  std::string checkpoint;
  std::string strategies = "greedy";
  std::uint64_t seed = 1;
  std::string output;
};

/// One row per instance size with mean Obj. and Gap per method.
int cmd_table(const CLI::App& sub, const TableOptions& o, std::ostream& out) {
  const auto rules = parse_rules(o.rules);
  const auto insts = load_inputs(o.in);
  const auto ubs = lookup_bounds(o.in, insts);

  std::vector<std::string> methods;
  auto columns = run_rules(insts, rules, o.seed, o.in.jobs);
  for (auto r : rules) methods.emplace_back(pdr_name(r));
  if (!o.checkpoint.empty()) {
    const auto strategies = parse_strategies(o.strategies);
    const auto net = load_checkpoint(o.checkpoint);
    auto model = run_strategies(net, insts, strategies, o.seed, o.in.jobs);
    for (std::size_t s = 0; s < strategies.size(); ++s) {
      methods.push_back("model_" + strategies[s].name());
      columns.push_back(std::move(model[s]));
    }
  }

  std::string text = config_echo(sub) + "size,instances";
  for (const auto& m : methods) text += fmt::format(",{}_obj,{}_gap", m, m);
  text += '\n';
  for (const auto& g : size_groups(insts)) {
    text += fmt::format("{},{}", g.label, g.members.size());
    for (const auto& col : columns) {
      const auto c = column_mean(g, col, ubs);
      text += fmt::format(",{:.1f},{}", c.makespan, format_mean_gap(c));
    }
    text += '\n';
  }
  emit(out, o.output, text);
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Job-shop scheduling toolkit: dispatch rules, exact oracle, policy training and decoding", "jsp"};
  app.set_config("--config", "", "Config file with one [subcommand] section of key=value lines; flags win");
  app.allow_config_extras(false);
  app.require_subcommand(1);

  GenerateOptions gen;
  auto* g = app.add_subcommand("generate", "Write random instances in the standard text format");
  g->add_option("--n", gen.n, "Jobs")->capture_default_str()->check(CLI::PositiveNumber);
  g->add_option("--m", gen.m, "Machines")->capture_default_str()->check(CLI::PositiveNumber);
  g->add_option("--seed", gen.seed, "Seed of the first instance")->capture_default_str();
  g->add_option("--count", gen.count, "Number of instances (seeds seed, seed+1, ...)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  g->add_option("--out-dir", gen.out_dir, "Directory for the files; stdout when omitted");

  PdrOptions pdr;
  auto* p = app.add_subcommand("pdr", "Run dispatch rules and report makespans and gaps");
  add_input_options(p, pdr.in, false);
  p->add_option("--rules", pdr.rules, "Comma list of spt, fddwkr, mwkr, mopnr, random")->join(',')->capture_default_str();
  p->add_option("--seed", pdr.seed, "Seed for the random rule")->capture_default_str();
  p->add_option("--output", pdr.output, "CSV file; stdout when omitted");

  OracleOptionsCli orc;
  auto* o = app.add_subcommand("oracle", "Solve tiny instances exactly");
  o->add_option("--instance", orc.files, "Instance file (repeatable)")->required()->check(CLI::ExistingFile);
  o->add_option("--budget", orc.budget, "Node budget")->capture_default_str()->check(CLI::PositiveNumber);
  o->add_flag("--no-prune", orc.no_prune, "Enumerate without bounding");

  TrainOptions tr;
  auto* t = app.add_subcommand("train", "Train the policy with a curriculum");
  t->add_option("--curriculum", tr.curriculum, "none, icl, ucl, ascl or rascl")->capture_default_str();
  t->add_option("--ladder", tr.ladder, "desk, benchmark, or a list like 3x3,4x4,6x6")->join(',')->capture_default_str();
  t->add_option("--iters", tr.iters, "Training iterations")->capture_default_str()->check(CLI::NonNegativeNumber);
  t->add_option("--batch", tr.batch, "Episodes per iteration")->capture_default_str()->check(CLI::PositiveNumber);
  t->add_option("--lr", tr.lr, "Adam learning rate")->capture_default_str();
  t->add_option("--seed", tr.seed, "Seed for weights, ladder and rollouts")->capture_default_str();
  t->add_option("--u", tr.u, "Gap check period")->capture_default_str()->check(CLI::PositiveNumber);
  t->add_option("--b", tr.b, "Resampling period")->capture_default_str()->check(CLI::PositiveNumber);
  t->add_option("--t-opt", tr.t_opt, "Gap threshold in percent")->capture_default_str();
  t->add_option("--patience", tr.patience, "Iterations without advancing before stepping back")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  t->add_option("--iters-per-level", tr.iters_per_level, "ICL budget per level (0: iters / levels)")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  t->add_option("--test-per-level", tr.test_per_level, "Frozen test instances per level")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  t->add_option("--embed-dim", tr.embed_dim, "Embedding width")->capture_default_str();
  t->add_option("--set2set-steps", tr.set2set_steps, "set2set processing steps")->capture_default_str();
  t->add_option("--eval-every", tr.eval_every, "Checkpoint period in iterations")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  t->add_option("--clip-norm", tr.clip_norm, "Global gradient-norm clip (10 is a sensible safety valve)");
  t->add_option("--jobs", tr.jobs, "Rollout threads per batch")->capture_default_str()->check(CLI::PositiveNumber);
  t->add_option("--out", tr.out_dir, "Output directory for model.ckpt, metrics.csv, levels.csv")->required();

  EvalOptions ev;
  auto* e = app.add_subcommand("eval", "Decode instances with a trained policy");
  add_input_options(e, ev.in, false);
  e->add_option("--checkpoint", ev.checkpoint, "Model checkpoint")->required()->check(CLI::ExistingFile);
  e->add_option("--strategies", ev.strategies, "Comma list of greedy, sample:N, pomo:W, beam:K")
      ->join(',')->capture_default_str();
  e->add_option("--seed", ev.seed, "Sampling seed")->capture_default_str();
  e->add_option("--output", ev.output, "CSV file; stdout when omitted");

  TableOptions tab;
  auto* tb = app.add_subcommand("table", "Per-size Obj./Gap table for rules and an optional model");
  add_input_options(tb, tab.in, true);
  tb->add_option("--rules", tab.rules, "Comma list of rules")->join(',')->capture_default_str();
  tb->add_option("--checkpoint", tab.checkpoint, "Model checkpoint")->check(CLI::ExistingFile);
  tb->add_option("--strategies", tab.strategies, "Model decoding strategies")->join(',')->capture_default_str();
  tb->add_option("--seed", tab.seed, "Seed for sampling and the random rule")->capture_default_str();
  tb->add_option("--output", tab.output, "CSV file; stdout when omitted");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& pe) {
    const int code = app.exit(pe, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (g->parsed()) return cmd_generate(gen, out);
    if (p->parsed()) return cmd_pdr(*p, pdr, out);
    if (o->parsed()) return cmd_oracle(orc, out);
    if (t->parsed()) return cmd_train(*t, tr, out, err);
    if (e->parsed()) return cmd_eval(*e, ev, out);
    if (tb->parsed()) return cmd_table(*tb, tab, out);
  } catch (const UsageError& ue) {
    err << "error: " << ue.what() << "\n";
    return 2;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace jsp

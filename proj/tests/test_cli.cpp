#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "common.hpp"
#include "doctest.h"
#include "jsp/cli.hpp"
#include "jsp/env.hpp"
#include "jsp/pdr.hpp"
#include "jsp/policy.hpp"

using namespace jsp;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

using Table = std::vector<std::vector<std::string>>;

/// Data rows (header included) with `#` comment lines dropped.
Table parse_csv(const std::string& text) {
  Table rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      cells.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    rows.push_back(cells);
  }
  return rows;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("jsp_cli_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

const std::string kRegistry = testing::data_path("ub_registry.csv");

std::vector<std::string> small_train(const std::string& out, const std::string& curriculum) {
  return {"train",        "--curriculum", curriculum, "--ladder",      "2x2,3x3",   "--iters", "40",
          "--batch",      "2",            "--u",      "10",            "--b",       "10",      "--embed-dim",
          "8",            "--set2set-steps", "1",     "--test-per-level", "3",      "--seed",  "1",
          "--out",        out};
}

}  // namespace

TEST_CASE("usage errors exit with 2, help with 0") {
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"--help"}).code == 0);
  CHECK(run({"pdr", "--instance", "/nonexistent/file.txt"}).code == 2);
  CHECK(run({"pdr"}).code == 2);
  CHECK(run({"train", "--out", "/tmp/x", "--curriculum", "adversarial"}).code == 2);
  CHECK(run({"train", "--out", "/tmp/x", "--ladder", "3x"}).code == 2);
}

TEST_CASE("generate and oracle") {
  TempDir dir("gen");
  const auto one = run({"generate", "--n", "3", "--m", "2", "--seed", "9"});
  REQUIRE(one.code == 0);
  CHECK(parse_standard(one.out) == generate(3, 2, 9));
  REQUIRE(run({"generate", "--n", "2", "--m", "2", "--seed", "5", "--count", "3", "--out-dir", dir / "inst"}).code == 0);
  CHECK(fs::exists(dir / "inst/g2x2_7.txt"));
  CHECK(run({"generate", "--count", "2"}).code == 2);

  write_text(dir / "ex.txt", serialize_standard(testing::example_2x2()));
  const auto o = run({"oracle", "--instance", dir / "ex.txt"});
  REQUIRE(o.code == 0);
  const auto rows = parse_csv(o.out);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == std::vector<std::string>{"name", "makespan", "status", "nodes"});
  CHECK(rows[1][1] == "7");
  CHECK(rows[1][2] == "optimal");
}

TEST_CASE("pdr report") {
  TempDir dir("pdr");
  fs::create_directories(dir / "ta");
  // Random 15x15 instances stored under benchmark names so registry bounds apply.
  for (int k : {1, 2, 10}) {
    auto inst = generate(15, 15, 100 + k);
    write_text(dir / ("ta/ta" + std::string(k < 10 ? "0" : "") + std::to_string(k) + ".txt"),
               serialize_standard(inst));
  }
  const auto r = run({"pdr", "--rules", "spt,mwkr", "--dir", dir / "ta", "--ub", kRegistry});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("# jsp pdr\n", 0) == 0);
  const auto rows = parse_csv(r.out);
  REQUIRE(rows.size() == 1 + 6 + 2);
  CHECK(rows[0] == std::vector<std::string>{"name", "rule", "makespan", "gap"});
  CHECK(rows[1][0] == "ta01");
  CHECK(rows[3][0] == "ta02");
  CHECK(rows[5][0] == "ta10");
  const auto ta1 = load_instance(dir / "ta/ta01.txt");
  const auto spt = pdr_rollout(ta1, PdrKind::Spt).makespan;
  CHECK(rows[1][1] == "spt");
  CHECK(rows[1][2] == std::to_string(spt));
  CHECK(std::stod(rows[1][3]) == doctest::Approx(gap_percent(static_cast<double>(spt), 1231)).epsilon(1e-12));

  double sum_gap = 0;
  for (int k : {1, 3, 5}) sum_gap += std::stod(rows[k][3]);
  CHECK(rows[7][0] == "mean_15x15");
  CHECK(rows[7][1] == "spt");
  CHECK(std::abs(std::stod(rows[7][3]) - sum_gap / 3) <= 0.01);

  CHECK(run({"pdr", "--rules", "xyz", "--dir", dir / "ta"}).code == 2);
  write_text(dir / "ta/mystery.txt", serialize_standard(generate(15, 15, 1)));
  const auto missing = run({"pdr", "--dir", dir / "ta", "--ub", kRegistry});
  CHECK(missing.code == 1);
  CHECK(missing.err.find("mystery") != std::string::npos);
  fs::remove(dir / "ta/mystery.txt");

  const auto j1 = run({"pdr", "--dir", dir / "ta", "--ub", kRegistry, "--jobs", "1"});
  const auto j3 = run({"pdr", "--dir", dir / "ta", "--ub", kRegistry, "--jobs", "3"});
  CHECK(parse_csv(j1.out) == parse_csv(j3.out));

  const auto t = run({"table", "--dir", dir / "ta", "--ub", kRegistry, "--rules", "spt,mwkr"});
  REQUIRE(t.code == 0);
  const auto trows = parse_csv(t.out);
  REQUIRE(trows.size() == 2);
  CHECK(trows[0] == std::vector<std::string>{"size", "instances", "spt_obj", "spt_gap", "mwkr_obj", "mwkr_gap"});
  CHECK(trows[1][0] == "15x15");
  CHECK(trows[1][1] == "3");
  CHECK(trows[1][3] == rows[7][3]);
}

TEST_CASE("train writes deterministic outputs") {
  TempDir dir("train");
  REQUIRE(run(small_train(dir / "a", "rascl")).code == 0);
  REQUIRE(run(small_train(dir / "b", "rascl")).code == 0);
  for (auto file : {"metrics.csv", "levels.csv"}) {
    auto a = slurp(fs::path(dir / "a") / file);
    auto b = slurp(fs::path(dir / "b") / file);
    // Only the output directory differs in the config echo.
    const auto strip = [](std::string s) {
      const auto p = s.find("out=");
      return s.erase(p, s.find('\n', p) - p);
    };
    CHECK(strip(a) == strip(b));
  }
  CHECK(slurp(fs::path(dir / "a") / "model.ckpt") == slurp(fs::path(dir / "b") / "model.ckpt"));

  REQUIRE(run(small_train(dir / "icl", "icl")).code == 0);
  const auto levels = parse_csv(slurp(fs::path(dir / "icl") / "levels.csv"));
  REQUIRE(levels.size() >= 2);
  int previous = 0;
  for (std::size_t k = 1; k < levels.size(); ++k) {
    const int l = std::stoi(levels[k][2]);
    CHECK(l >= previous);
    previous = l;
  }
  const auto metrics = parse_csv(slurp(fs::path(dir / "icl") / "metrics.csv"));
  CHECK(metrics.size() == 41);
  CHECK(metrics.back()[1] == "1");

  auto zero = small_train(dir / "zero", "rascl");
  zero[6] = "0";
  REQUIRE(run(zero).code == 0);
  PolicyConfig cfg;
  cfg.embed_dim = 8;
  cfg.set2set_steps = 1;
  const auto loaded = PolicyNet::load_file(dir / "zero/model.ckpt");
  CHECK(loaded.config() == cfg);
  CHECK(loaded.params().same_values(PolicyNet(cfg, 1).params()));
}

TEST_CASE("config file values apply and flags win") {
  TempDir dir("config");
  write_text(dir / "run.cfg", "[train]\niters=3\nbatch=2\nladder=2x2,3x3\nembed-dim=8\nset2set-steps=1\n"
                              "test-per-level=2\nout=" + (dir / "cfg") + "\n");
  REQUIRE(run({"--config", dir / "run.cfg", "train", "--iters", "5"}).code == 0);
  const auto text = slurp(fs::path(dir / "cfg") / "metrics.csv");
  CHECK(text.find("# iters=5\n") != std::string::npos);
  CHECK(text.find("# ladder=\"2x2,3x3\"\n") != std::string::npos);
  CHECK(parse_csv(text).size() == 6);

  write_text(dir / "bad.cfg", "[train]\nbogus=1\n");
  CHECK(run({"--config", dir / "bad.cfg", "train", "--out", dir / "x"}).code == 2);
}

TEST_CASE("eval compares strategies") {
  TempDir dir("eval");
  auto args = small_train(dir / "m", "none");
  args[6] = "5";
  REQUIRE(run(args).code == 0);
  REQUIRE(run({"generate", "--n", "4", "--m", "3", "--count", "6", "--out-dir", dir / "inst"}).code == 0);
  const auto ckpt = dir / "m/model.ckpt";

  const auto same = run({"eval", "--checkpoint", ckpt, "--dir", dir / "inst", "--strategies", "greedy,beam:1"});
  REQUIRE(same.code == 0);
  const auto rows = parse_csv(same.out);
  REQUIRE(rows.size() == 1 + 6 + 1);
  CHECK(rows[0] == std::vector<std::string>{"name", "size", "ub", "greedy", "beam:1"});
  for (std::size_t k = 1; k < rows.size(); ++k) CHECK(rows[k][3] == rows[k][4]);

  const auto pomo = run({"eval", "--checkpoint", ckpt, "--dir", dir / "inst", "--strategies", "greedy,pomo:3"});
  REQUIRE(pomo.code == 0);
  const auto prows = parse_csv(pomo.out);
  for (std::size_t k = 1; k < prows.size(); ++k) CHECK(std::stod(prows[k][4]) <= std::stod(prows[k][3]));

  CHECK(run({"eval", "--checkpoint", dir / "missing.ckpt", "--dir", dir / "inst"}).code == 2);
  CHECK(run({"eval", "--checkpoint", ckpt, "--dir", dir / "inst", "--strategies", "mcts:2"}).code == 2);
  write_text(dir / "broken.ckpt", "not a checkpoint");
  CHECK(run({"eval", "--checkpoint", dir / "broken.ckpt", "--dir", dir / "inst"}).code == 1);

  const auto table = run({"table", "--dir", dir / "inst", "--ub", kRegistry});
  CHECK(table.code == 1);  // generated names are not in the registry
}

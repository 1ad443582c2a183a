#include "jsp/instance.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "jsp/error.hpp"

namespace jsp {

Instance Instance::create(std::string name, std::vector<std::vector<Operation>> jobs) {
  if (jobs.empty()) throw ContractError("instance has no jobs");
  const int m = static_cast<int>(jobs.front().size());
  if (m == 0) throw ContractError("instance has no machines");

  Instance inst;
  inst.name_ = std::move(name);
  inst.n_machines_ = m;
  inst.machine_load_.assign(m, 0);
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& job = jobs[i];
    if (static_cast<int>(job.size()) != m) {
      throw ContractError("job " + std::to_string(i) + " has " + std::to_string(job.size()) +
                          " operations, expected " + std::to_string(m));
    }
    std::vector<bool> seen(m, false);
    Time work = 0;
    for (const auto& op : job) {
      if (op.machine < 0 || op.machine >= m) {
        throw ContractError("machine " + std::to_string(op.machine) + " out of range in job " +
                            std::to_string(i));
      }
      if (op.duration < 1) {
        throw ContractError("non-positive duration in job " + std::to_string(i));
      }
      if (seen[op.machine]) {
        throw ContractError("duplicate machine " + std::to_string(op.machine) + " in job " +
                            std::to_string(i));
      }
      seen[op.machine] = true;
      work += op.duration;
      inst.machine_load_[op.machine] += op.duration;
    }
    inst.job_work_.push_back(work);
    inst.total_work_ += work;
    inst.max_job_work_ = std::max(inst.max_job_work_, work);
  }
  inst.jobs_ = std::move(jobs);
  return inst;
}

Instance Instance::permuted(const std::vector<int>& order) const {
  if (static_cast<int>(order.size()) != n_jobs()) throw ContractError("permutation size mismatch");
  std::vector<std::vector<Operation>> jobs;
  jobs.reserve(order.size());
  for (int k : order) jobs.push_back(jobs_.at(k));
  return create(name_, std::move(jobs));
}

namespace {

struct Line {
  int number;
  std::vector<std::string_view> tokens;
};

bool is_blank_or_comment(std::string_view line) {
  auto pos = line.find_first_not_of(" \t\r");
  return pos == std::string_view::npos || line[pos] == '#';
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<Line> content_lines(std::string_view text) {
  std::vector<Line> lines;
  int number = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++number;
    auto line = text.substr(start, end - start);
    if (!is_blank_or_comment(line)) lines.push_back({number, split_ws(line)});
    start = end + 1;
  }
  return lines;
}

bool parse_int(std::string_view token, long long& value) {
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  return ec == std::errc() && ptr == token.data() + token.size();
}

bool is_numeric_line(const Line& line) {
  long long v = 0;
  return !line.tokens.empty() && parse_int(line.tokens.front(), v);
}

std::vector<long long> ints_of(const Line& line) {
  std::vector<long long> out;
  out.reserve(line.tokens.size());
  for (auto tok : line.tokens) {
    long long v = 0;
    if (!parse_int(tok, v)) {
      throw ParseError("malformed token '" + std::string(tok) + "'", line.number);
    }
    out.push_back(v);
  }
  return out;
}

std::pair<int, int> parse_header(const Line& line, bool allow_extra) {
  auto v = ints_of(line);
  if (v.size() < 2 || (!allow_extra && v.size() != 2)) {
    throw ParseError("expected header 'n m'", line.number);
  }
  if (v[0] < 1 || v[1] < 1) throw ParseError("n and m must be positive", line.number);
  return {static_cast<int>(v[0]), static_cast<int>(v[1])};
}

Instance build(std::string name, std::vector<std::vector<Operation>> jobs,
               const std::vector<int>& job_lines) {
  // Re-run the invariant checks here so that violations carry a line number.
  const int m = static_cast<int>(jobs.front().size());
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    std::vector<bool> seen(m, false);
    for (const auto& op : jobs[i]) {
      if (op.duration < 1) {
        throw ParseError("non-positive duration in job " + std::to_string(i), job_lines[i]);
      }
      if (seen[op.machine]) {
        throw ParseError("duplicate machine " + std::to_string(op.machine) + " in job " +
                             std::to_string(i),
                         job_lines[i]);
      }
      seen[op.machine] = true;
    }
  }
  return Instance::create(std::move(name), std::move(jobs));
}

}  // namespace

Instance parse_standard(std::string_view text, std::string name) {
  auto lines = content_lines(text);
  if (lines.empty()) throw ParseError("empty instance", 0);
  auto [n, m] = parse_header(lines[0], false);
  if (static_cast<int>(lines.size()) - 1 < n) {
    throw ParseError("expected " + std::to_string(n) + " job lines, found " +
                         std::to_string(lines.size() - 1),
                     lines.back().number);
  }
  if (static_cast<int>(lines.size()) - 1 > n) {
    throw ParseError("unexpected trailing data", lines[n + 1].number);
  }
  std::vector<std::vector<Operation>> jobs(n);
  std::vector<int> job_lines(n);
  for (int i = 0; i < n; ++i) {
    const auto& line = lines[i + 1];
    job_lines[i] = line.number;
    auto v = ints_of(line);
    if (v.size() != static_cast<std::size_t>(2 * m)) {
      throw ParseError("job " + std::to_string(i) + " has " + std::to_string(v.size()) +
                           " values, expected " + std::to_string(2 * m),
                       line.number);
    }
    for (int j = 0; j < m; ++j) {
      auto machine = v[2 * j];
      if (machine < 0 || machine >= m) {
        throw ParseError("machine " + std::to_string(machine) + " out of range [0, " +
                             std::to_string(m) + ")",
                         line.number);
      }
      jobs[i].push_back({static_cast<int>(machine), static_cast<Time>(v[2 * j + 1])});
    }
  }
  return build(std::move(name), std::move(jobs), job_lines);
}

Instance parse_taillard(std::string_view text, std::string name) {
  auto all = content_lines(text);
  std::vector<Line> lines;
  for (auto& l : all) {
    if (is_numeric_line(l)) lines.push_back(std::move(l));
  }
  if (lines.empty()) throw ParseError("empty instance", 0);
  auto [n, m] = parse_header(lines[0], true);
  const int rows = static_cast<int>(lines.size()) - 1;
  if (rows != 2 * n) {
    throw ParseError("expected " + std::to_string(n) + " time rows and " + std::to_string(n) +
                         " machine rows, found " + std::to_string(rows) + " rows",
                     lines.back().number);
  }
  std::vector<std::vector<Operation>> jobs(n, std::vector<Operation>(m));
  std::vector<int> job_lines(n);
  for (int i = 0; i < n; ++i) {
    const auto& times = lines[1 + i];
    const auto& machines = lines[1 + n + i];
    job_lines[i] = machines.number;
    auto t = ints_of(times);
    auto mc = ints_of(machines);
    if (t.size() != static_cast<std::size_t>(m)) {
      throw ParseError("time row has " + std::to_string(t.size()) + " entries, expected " +
                           std::to_string(m),
                       times.number);
    }
    if (mc.size() != static_cast<std::size_t>(m)) {
      throw ParseError("machine row has " + std::to_string(mc.size()) + " entries, expected " +
                           std::to_string(m),
                       machines.number);
    }
    for (int j = 0; j < m; ++j) {
      if (mc[j] < 1 || mc[j] > m) {
        throw ParseError("machine " + std::to_string(mc[j]) + " out of range [1, " +
                             std::to_string(m) + "]",
                         machines.number);
      }
      jobs[i][j] = {static_cast<int>(mc[j] - 1), static_cast<Time>(t[j])};
    }
  }
  return build(std::move(name), std::move(jobs), job_lines);
}

Instance parse_any(std::string_view text, std::string name) {
  auto lines = content_lines(text);
  std::vector<Line> numeric;
  for (auto& l : lines) {
    if (is_numeric_line(l)) numeric.push_back(std::move(l));
  }
  if (numeric.size() < 2) return parse_standard(text, std::move(name));
  auto [n, m] = parse_header(numeric[0], true);
  (void)n;
  const bool taillard = numeric[1].tokens.size() != static_cast<std::size_t>(2 * m);
  return taillard ? parse_taillard(text, std::move(name)) : parse_standard(text, std::move(name));
}

std::string serialize_standard(const Instance& inst) {
  std::ostringstream out;
  out << inst.n_jobs() << ' ' << inst.n_machines() << '\n';
  for (const auto& job : inst.jobs()) {
    for (std::size_t j = 0; j < job.size(); ++j) {
      if (j) out << ' ';
      out << job[j].machine << ' ' << job[j].duration;
    }
    out << '\n';
  }
  return out.str();
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string stem_of(const std::string& path) {
  auto slash = path.find_last_of("/\\");
  auto base = slash == std::string::npos ? path : path.substr(slash + 1);
  auto dot = base.find_last_of('.');
  return dot == std::string::npos || dot == 0 ? base : base.substr(0, dot);
}

}  // namespace

Instance load_instance(const std::string& path) {
  auto text = read_file(path);
  try {
    return parse_any(text, stem_of(path));
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), 0);
  }
}

Instance generate(int n, int m, std::uint64_t seed) {
  if (n < 1 || m < 1) throw ContractError("generate: n and m must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> duration(1, 99);
  std::vector<std::vector<Operation>> jobs(n);
  std::vector<int> route(m);
  for (auto& job : jobs) {
    std::iota(route.begin(), route.end(), 0);
    std::shuffle(route.begin(), route.end(), rng);
    for (int k : route) job.push_back({k, duration(rng)});
  }
  return Instance::create("gen_" + std::to_string(n) + "x" + std::to_string(m) + "_s" +
                              std::to_string(seed),
                          std::move(jobs));
}

std::string canonical_instance_name(std::string_view name) {
  std::string upper;
  for (char c : name) upper.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  auto digits = upper.find_first_of("0123456789");
  if (digits == std::string::npos || upper.find_first_not_of("0123456789", digits) != std::string::npos) {
    return upper;
  }
  auto nonzero = upper.find_first_not_of('0', digits);
  if (nonzero == std::string::npos) nonzero = upper.size() - 1;
  return upper.substr(0, digits) + upper.substr(nonzero);
}

UbRegistry::UbRegistry(std::vector<UbEntry> entries) : entries_(std::move(entries)) {}

const UbEntry* UbRegistry::find(std::string_view name) const {
  auto key = canonical_instance_name(name);
  for (const auto& e : entries_) {
    if (canonical_instance_name(e.instance_name) == key) return &e;
  }
  return nullptr;
}

UbRegistry parse_ub_registry(std::string_view csv) {
  std::vector<UbEntry> entries;
  int number = 0;
  bool header_seen = false;
  std::size_t start = 0;
  while (start < csv.size()) {
    auto end = csv.find('\n', start);
    if (end == std::string_view::npos) end = csv.size();
    auto line = csv.substr(start, end - start);
    start = end + 1;
    ++number;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (is_blank_or_comment(line)) continue;
    if (!header_seen) {
      if (line != "name,n,m,ub,optimal") throw ParseError("expected header name,n,m,ub,optimal", number);
      header_seen = true;
      continue;
    }
    std::vector<std::string_view> fields;
    std::size_t f = 0;
    while (true) {
      auto comma = line.find(',', f);
      fields.push_back(line.substr(f, comma == std::string_view::npos ? line.npos : comma - f));
      if (comma == std::string_view::npos) break;
      f = comma + 1;
    }
    if (fields.size() != 5) throw ParseError("expected 5 fields", number);
    long long n = 0, m = 0, ub = 0, opt = 0;
    if (!parse_int(fields[1], n) || !parse_int(fields[2], m) || !parse_int(fields[3], ub) ||
        !parse_int(fields[4], opt) || ub < 1 || (opt != 0 && opt != 1)) {
      throw ParseError("malformed registry row", number);
    }
    entries.push_back({std::string(fields[0]), static_cast<int>(n), static_cast<int>(m), ub, opt == 1});
  }
  if (!header_seen) throw ParseError("missing header", 0);
  return UbRegistry(std::move(entries));
}

UbRegistry load_ub_registry(const std::string& path) { return parse_ub_registry(read_file(path)); }

const UbEntry& ub_lookup(const UbRegistry& registry, std::string_view name) {
  if (const auto* e = registry.find(name)) return *e;
  throw NotFoundError("no upper bound for instance '" + std::string(name) + "'");
}

}  // namespace jsp

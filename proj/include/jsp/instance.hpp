#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace jsp {

using Time = std::int64_t;

struct Operation {
  int machine = 0;
  Time duration = 1;

  friend bool operator==(const Operation&, const Operation&) = default;
};

/// Square job-shop instance: n jobs, each visiting all m machines exactly once.
/// Immutable after construction; construct through `Instance::create` or a parser.
class Instance {
 public:
  Instance() = default;

  /// Validates the invariants and throws ContractError on violation.
  static Instance create(std::string name, std::vector<std::vector<Operation>> jobs);

  const std::string& name() const noexcept { return name_; }
  int n_jobs() const noexcept { return static_cast<int>(jobs_.size()); }
  int n_machines() const noexcept { return n_machines_; }
  int n_ops() const noexcept { return n_jobs() * n_machines_; }

  const std::vector<Operation>& job(int i) const { return jobs_.at(i); }
  const Operation& op(int job, int index) const { return jobs_[job][index]; }
  const std::vector<std::vector<Operation>>& jobs() const noexcept { return jobs_; }

  Time job_work(int job) const { return job_work_.at(job); }
  Time machine_load(int machine) const { return machine_load_.at(machine); }
  Time total_work() const noexcept { return total_work_; }
  /// Longest job (sum of its durations).
  Time max_job_work() const noexcept { return max_job_work_; }

  /// Same instance with jobs reordered: result job k is this instance's job order[k].
  Instance permuted(const std::vector<int>& order) const;

  /// Equality ignores the name.
  friend bool operator==(const Instance& a, const Instance& b) {
    return a.n_machines_ == b.n_machines_ && a.jobs_ == b.jobs_;
  }

 private:
  std::string name_;
  int n_machines_ = 0;
  std::vector<std::vector<Operation>> jobs_;
  std::vector<Time> job_work_;
  std::vector<Time> machine_load_;
  Time total_work_ = 0;
  Time max_job_work_ = 0;
};

/// "n m" header followed by n lines of m `machine duration` pairs, 0-based machines.
/// Blank lines and lines starting with '#' are ignored.
Instance parse_standard(std::string_view text, std::string name = "");

/// Taillard layout: header whose first two integers are n and m, an n x m
/// processing-time matrix, then an n x m machine matrix with 1-based indices.
/// Label lines such as "Times" / "Machines" are skipped.
Instance parse_taillard(std::string_view text, std::string name = "");

/// Detects the layout from the width of the first data row.
Instance parse_any(std::string_view text, std::string name = "");

std::string serialize_standard(const Instance& inst);

Instance load_instance(const std::string& path);

/// Durations uniform in [1, 99]; each job's route a uniform permutation of the machines.
Instance generate(int n, int m, std::uint64_t seed);

struct UbEntry {
  std::string instance_name;
  int n = 0;
  int m = 0;
  Time upper_bound = 0;
  bool proven_optimal = false;
};

class UbRegistry {
 public:
  UbRegistry() = default;
  explicit UbRegistry(std::vector<UbEntry> entries);

  const std::vector<UbEntry>& entries() const noexcept { return entries_; }
  const UbEntry* find(std::string_view name) const;

 private:
  std::vector<UbEntry> entries_;
};

/// CSV with header `name,n,m,ub,optimal`.
UbRegistry parse_ub_registry(std::string_view csv);
UbRegistry load_ub_registry(const std::string& path);

/// Case-insensitive, ignores leading zeros of the numeric suffix ("ta01" finds "TA1").
/// Throws NotFoundError for unknown names.
const UbEntry& ub_lookup(const UbRegistry& registry, std::string_view name);

/// "ta01" -> "TA1"; used for registry keys and file-stem matching.
std::string canonical_instance_name(std::string_view name);

}  // namespace jsp

#pragma once

#include <string>
#include <vector>

#include "jsp/instance.hpp"
#include "oracles/enumerate.hpp"

namespace testing {

/// J1 = [(M0,3),(M1,2)], J2 = [(M1,2),(M0,4)].
inline jsp::Instance example_2x2() {
  return jsp::Instance::create("ex2x2", {{{0, 3}, {1, 2}}, {{1, 2}, {0, 4}}});
}

inline jsp::Instance single_op() { return jsp::Instance::create("one", {{{0, 7}}}); }

inline std::vector<oracle::Job> as_jobs(const jsp::Instance& inst) {
  std::vector<oracle::Job> jobs;
  for (const auto& job : inst.jobs()) {
    oracle::Job j;
    for (const auto& op : job) j.emplace_back(op.machine, op.duration);
    jobs.push_back(std::move(j));
  }
  return jobs;
}

inline std::string data_path(const std::string& file) { return std::string(JSP_DATA_DIR) + "/" + file; }

}  // namespace testing

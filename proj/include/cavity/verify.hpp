#pragma once

#include <functional>
#include <string>
#include <vector>

namespace cavity {

struct Check {
  std::string criterion;  // "1".."9"
  std::string name;
  double observed = 0;
  double tolerance = 0;
  std::string relation = "<";  // observed <relation> tolerance must hold
  bool pass = false;
  bool known_limitation = false;  // failure analysed and documented, not a regression
  std::string detail;
};

struct SuiteReport {
  std::vector<Check> checks;
  double seconds = 0;
  double budget = 0;  // runtime limit in seconds
  bool pass() const;
};

// Suites: forward, reciprocity, crossterm, branch, graze, retrieval,
// uniqueness, inversion, eigen; "all" runs every one in that order.
std::vector<std::string> suite_names();
SuiteReport run_suite(const std::string& name, const std::function<void(const Check&)>& on_check = {});

std::string format_check(const Check& c);

}  // namespace cavity

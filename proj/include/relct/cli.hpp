#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace relct::cli {

struct CliOptions {
  std::vector<std::string> inputs;
  std::string entry;
  uint32_t unroll_limit = 512;
  bool invariants = false;
  bool select_unsafe = false;
  size_t portfolio_threshold = 1500;
  double timeout = 5400;
  std::string solver_config;
  std::string format = "text";
  bool stats = false;
  uint64_t path_limit = 0;
  bool no_cache = false;
  std::string feasibility = "at_branch";
};

// Exit codes: 0 verified, 1 violations, 2 incomplete, 3 usage or input error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

} // namespace relct::cli

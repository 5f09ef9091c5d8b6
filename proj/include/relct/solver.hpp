#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "relct/expr.hpp"

namespace relct {

enum class QueryKind : uint8_t {
  MemIndexDivergence,
  BranchDivergence,
  PolicyProbe,
  InvariantAssert,
  Feasibility,
};

const char* query_kind_name(QueryKind k);

// Conjunction of width-1 terms, each asserted to be 1. Path conditions
// come first so that models satisfy the path.
struct QueryFormula {
  QueryKind kind = QueryKind::Feasibility;
  std::vector<const Node*> assertions;
  size_t expr_count = 0; // count_nodes(assertions)
};

QueryFormula make_query(QueryKind kind, std::vector<const Node*> assertions);

// SMT-LIB names. Right-projection symbols carry an _R suffix and
// left-projection ones _L; shared symbols keep their plain name.
std::string smt_symbol(const std::string& name, Side side);
std::string array_symbol(uint32_t generation, Side side);

// Declarations, definitions and assertions (no check-sat). `request`, if
// given, receives the command that asks for the declared symbols' values.
std::string encode_smtlib(const QueryFormula& q, std::string* request = nullptr);
// Stand-alone script: logic, options, encoding, check-sat, value request.
std::string smtlib_script(const QueryFormula& q);

struct ArrayValue {
  uint8_t fallback = 0;
  std::map<uint32_t, uint8_t> entries;
  uint8_t at(uint32_t addr) const {
    auto it = entries.find(addr);
    return it == entries.end() ? fallback : it->second;
  }
  bool operator==(const ArrayValue&) const = default;
};

struct Model {
  std::map<std::string, uint64_t> values;
  std::map<std::string, ArrayValue> arrays;

  // Symbols the solver left out are don't-cares and read as 0.
  uint64_t value_of(const std::string& smt_name) const {
    auto it = values.find(smt_name);
    return it == values.end() ? 0 : it->second;
  }
  uint8_t byte_of(const std::string& array, uint32_t addr) const {
    auto it = arrays.find(array);
    return it == arrays.end() ? 0 : it->second.at(addr);
  }
  bool operator==(const Model&) const = default;
};

// Parses a `(get-model)` or `(get-value ...)` response. Throws MalformedModel.
Model parse_model(std::string_view raw);

enum class SolverStatus : uint8_t { Sat, Unsat, Unknown, Timeout, Error };
const char* status_name(SolverStatus s);

struct SolverAnswer {
  SolverStatus status = SolverStatus::Error;
  std::optional<Model> model; // present iff Sat
  std::string responder;      // backend name
  bool portfolio = false;     // routed to the portfolio
  double elapsed = 0;         // seconds
  std::string detail;
};

// Parses a full one-shot response: status line, then the model if sat.
SolverAnswer parse_answer(std::string_view raw);

struct SolverCommand {
  std::string name;
  std::vector<std::string> argv;
  bool operator==(const SolverCommand&) const = default;
};

struct SolverConfig {
  SolverCommand small;                 // persistent process
  std::vector<SolverCommand> portfolio; // one fresh process per query
  double timeout = 10;                 // seconds per query
  size_t threshold = 1500;             // expr_count above this goes to the portfolio
  size_t jobs = default_jobs();        // portfolio workers running at once

  static size_t default_jobs();

  // `name: argv...` per line; the first backend line must be `small:`.
  // Blank lines and lines starting with '#' are ignored.
  static SolverConfig parse(std::string_view text);
  static SolverConfig load(const std::string& path);
  // RELCT_SOLVER_CONFIG if set, else the built-in default file, else
  // `z3 -in` as the only backend.
  static SolverConfig defaults();
};

class Solver {
public:
  explicit Solver(SolverConfig cfg);
  ~Solver();
  Solver(const Solver&) = delete;
  Solver& operator=(const Solver&) = delete;

  SolverAnswer dispatch(const QueryFormula& q);
  SolverAnswer run_small(const QueryFormula& q);
  SolverAnswer run_portfolio(const QueryFormula& q);

  const SolverConfig& config() const { return cfg_; }
  SolverConfig& config() { return cfg_; }

private:
  struct Interactive;
  SolverConfig cfg_;
  std::unique_ptr<Interactive> small_;
};

} // namespace relct

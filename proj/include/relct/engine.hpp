#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "relct/ast.hpp"
#include "relct/expr.hpp"
#include "relct/memory.hpp"
#include "relct/solver.hpp"
#include "relct/wat.hpp"

namespace relct {

enum class VerdictKind : uint8_t { Safe, Violation, Unknown, Trap, PathInfeasible };
enum class CheckKind : uint8_t { MemoryIndex, Branch, BrTable, CallIndirect, Select };

const char* verdict_kind_name(VerdictKind k);
const char* check_kind_name(CheckKind k);

struct Site {
  std::string func;
  uint32_t instr = 0; // Instr::id
  std::string op;
  SourceLoc loc;
  bool operator==(const Site&) const = default;
};

struct Verdict {
  VerdictKind kind = VerdictKind::Safe;
  CheckKind check = CheckKind::Branch;
  Site site;
  std::optional<Model> model; // Violation only
  uint32_t visit = 0;         // 0-based visit index of the site on the path
  bool summarized = false;    // found under a havocked loop state
  uint32_t occurrences = 1;   // merged duplicates at the same site
  std::string detail;
  bool operator==(const Verdict&) const = default;
};

enum class FeasibilityPolicy : uint8_t { AtBranch, Never };

struct EngineConfig {
  uint32_t unroll_limit = 512;
  uint64_t path_limit = 0; // 0: unlimited
  double time_budget = 5400;
  bool select_unsafe = false;
  bool invariants = false;
  size_t portfolio_threshold = 1500;
  FeasibilityPolicy feasibility = FeasibilityPolicy::AtBranch;
  bool use_cache = true;
  // Witness search: check only this instruction and stop at its first
  // violation.
  std::optional<uint32_t> target;
};

struct Counters {
  uint64_t formulas_simplified = 0; // #FS
  uint64_t solver_queries = 0;      // #SS
  uint64_t paths_explored = 0;
  uint64_t loc_visited = 0;
  double wall_time = 0;
  bool operator==(const Counters&) const = default;
};

// One slot of loop state: a local of the enclosing frame, a global, or a
// memory byte. `whole_memory` stands for every byte.
struct Slot {
  enum class Kind : uint8_t { Local, Global, Byte, WholeMemory };
  Kind kind = Kind::Local;
  uint32_t index = 0;
  auto operator<=>(const Slot&) const = default;
  std::string name() const;
  // Inverse of name(); nullopt for anything else.
  static std::optional<Slot> parse(const std::string& text);
};

struct LoopInvariant {
  std::string func;
  uint32_t instr = 0;
  SourceLoc loc;
  std::vector<Slot> modified;      // V
  std::vector<Slot> public_subset; // V_p
  std::map<Slot, uint64_t> const_bindings;
  bool policy_layout = true; // whole-memory havoc kept the policy ranges
  bool assert_ok = true;
  std::string failure; // slot whose assertion failed
  bool operator==(const LoopInvariant&) const = default;

  // "{lv4_l = lv4_r}" style rendering of I.
  std::string formula() const;
};

struct AnalysisResult {
  std::vector<Verdict> verdicts;
  Counters counters;
  bool complete = true;
  std::string reason; // first reason for incompleteness
  std::vector<LoopInvariant> invariants;
};

struct Label {
  const std::vector<Instr>* body = nullptr;
  size_t pos = 0;
  const Instr* instr = nullptr; // null for the function body
  uint32_t height = 0;
  uint8_t end_arity = 0;
  uint8_t br_arity = 0;
  bool is_loop = false;
  uint32_t iter = 0;
  uint64_t instance = 0;
};

struct Frame {
  uint32_t func = 0;
  std::vector<RelExpr> locals;
  std::vector<Label> labels;
  uint32_t stack_base = 0;
};

struct SymState {
  std::vector<Frame> frames;
  std::vector<RelExpr> stack;
  std::vector<RelExpr> globals;
  SymMemory mem;
  std::vector<RelExpr> pc; // width-1 conjuncts
  std::map<uint32_t, uint32_t> visits;
  std::vector<RelExpr> results;
  bool finished = false; // returned from the entry function
  bool dead = false;     // trapped, exhausted or absorbed
  bool summarized = false;
  bool checks = true;
  uint64_t back_edge = 0; // loop instance jumped to by the last step
};

class Engine {
public:
  Engine(const ModuleAst& ast, const EngineConfig& cfg, Solver& solver);

  AnalysisResult explore();
  SymState init_state(const wat::ResolvedEntry& entry);

  // Runs states to completion. With a nonzero `watch`, states taking the
  // back edge of that loop instance go to `iteration_ends` and states whose
  // label for it is gone go to `exits`.
  struct RunOutcome {
    std::vector<SymState> iteration_ends;
    std::vector<SymState> exits;
  };
  RunOutcome run(std::vector<SymState> work, uint64_t watch);

  // Builds the formula pc ∧ goal, counts it toward #FS and dispatches it
  // unless simplification decides it.
  SolverAnswer decide(QueryKind kind, const SymState& s, std::vector<const Node*> goal);
  // True iff pc ∧ v_l ≠ v_r is unsat. Shared values need no query.
  bool provably_public(const SymState& s, const RelExpr& v);

  void add_pc(SymState& s, const RelExpr& cond);
  void mark_incomplete(const std::string& reason);
  void record(Verdict v);

  const Node* simp(const Node* e);
  RelExpr simp(const RelExpr& e);

  ExprContext& ctx() { return ctx_; }
  const ModuleAst& ast() const { return ast_; }
  const EngineConfig& config() const { return cfg_; }
  Counters& counters() { return result_.counters; }
  std::vector<LoopInvariant>& invariants();
  // Results gathered so far; loop analysis rolls back discarded rounds.
  AnalysisResult& partial() { return result_; }
  uint64_t fresh_instance() { return ++instances_; }
  uint32_t fresh_generation() { return ++generations_; }
  std::string fresh_name(const std::string& prefix);
  bool out_of_time() const;

private:
  void step(SymState& s, std::vector<SymState>& forks);
  void exec(SymState& s, const Instr& in, std::vector<SymState>& forks);
  void enter_loop(SymState& s, const Instr& in, std::vector<SymState>& forks);
  void end_label(SymState& s);
  void branch(SymState& s, uint32_t depth);
  void do_return(SymState& s);
  void call(SymState& s, uint32_t func);
  void trap(SymState& s, const Instr& in, const std::string& why);
  void end_path(SymState& s);

  Verdict check(CheckKind kind, SymState& s, const Instr& in, const RelExpr& value,
                uint32_t visit);
  bool feasible(const SymState& s, const std::vector<RelExpr>& extra);
  // Splits `s` on a condition; returns the successors that survive.
  std::vector<SymState> split(SymState& s, const RelExpr& cond);
  void access(SymState& s, const Instr& in, RelExpr& ea, uint32_t visit);
  Site site_of(const SymState& s, const Instr& in) const;

  const ModuleAst& ast_;
  EngineConfig cfg_;
  Solver& solver_;
  ExprContext ctx_;
  ExprCache cache_;
  AnalysisResult result_;
  std::vector<bool> seen_;
  uint64_t instances_ = 0;
  uint32_t generations_ = 0;
  uint64_t names_ = 0;
  std::chrono::steady_clock::time_point start_;
  bool stop_ = false;
};

AnalysisResult explore(const ModuleAst& ast, const EngineConfig& cfg, Solver& solver);

} // namespace relct

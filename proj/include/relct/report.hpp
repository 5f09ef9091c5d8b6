#pragma once

#include <optional>
#include <string>
#include <vector>

#include "relct/engine.hpp"

namespace relct {

// Concrete inputs of one execution.
struct Valuation {
  std::vector<uint64_t> args;
  std::vector<uint8_t> memory;
  std::vector<uint64_t> globals;
};

// Side L or R of a dual model. Secret bytes come from the h_m0_<addr>
// symbols, other bytes from the data segments or the shared array M0.
Valuation valuation_from_model(const ModuleAst& ast, const Model& model, Side side);

// Observations at one instruction during a concrete run: branch outcomes
// (0/1), br_table targets, indirect callees or effective addresses.
struct ConcreteRun {
  std::vector<uint64_t> observations;
  std::vector<uint64_t> results;
  bool trapped = false;
  std::string trap;
};

// Plain interpreter over the AST, sharing nothing with the symbolic engine.
ConcreteRun run_concrete(const ModuleAst& ast, uint32_t func, const Valuation& in,
                         uint32_t watch_instr, uint64_t step_limit = 50'000'000);

struct ReplayResult {
  size_t verdict = 0; // index into AnalysisReport::verdicts
  bool confirmed = false;
  std::string reason;
  bool operator==(const ReplayResult&) const = default;
};

ReplayResult replay(const ModuleAst& ast, const Model& model, const Verdict& v);

struct AnalysisReport {
  std::vector<Verdict> verdicts; // merged per (site, check, kind)
  Counters counters;
  bool complete = true;
  std::string reason;
  std::vector<ReplayResult> replays; // one per Violation
  std::vector<LoopInvariant> invariants;

  size_t violations() const;
  bool operator==(const AnalysisReport&) const = default;
};

// Merges duplicate verdicts and replays every violation.
AnalysisReport make_report(const ModuleAst& ast, AnalysisResult result);

// 0 verified, 1 violations, 2 incomplete.
int exit_code(const AnalysisReport& r);

std::string render_text(const AnalysisReport& r, bool stats);
std::string render_json(const AnalysisReport& r);
// Throws Error("ReportFormat") on schema mismatches.
AnalysisReport report_from_json(const std::string& text);

} // namespace relct

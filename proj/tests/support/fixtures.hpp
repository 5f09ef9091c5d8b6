#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "relct/engine.hpp"
#include "relct/report.hpp"
#include "relct/solver.hpp"
#include "relct/wat.hpp"

namespace fixtures {

inline std::string corpus(const std::string& name) {
  return std::string(RELCT_CORPUS_DIR) + "/" + name;
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline relct::ModuleAst load(const std::string& corpus_name) {
  return relct::wat::parse_module(slurp(corpus(corpus_name)));
}

struct Run {
  relct::ModuleAst ast;
  relct::AnalysisResult result;
  relct::AnalysisReport report;
};

inline Run analyze_source(const std::string& source, relct::EngineConfig cfg = {}) {
  Run r;
  r.ast = relct::wat::parse_module(source);
  relct::Solver solver(relct::SolverConfig::defaults());
  r.result = relct::explore(r.ast, cfg, solver);
  r.report = relct::make_report(r.ast, r.result);
  return r;
}

inline Run analyze(const std::string& corpus_name, relct::EngineConfig cfg = {}) {
  return analyze_source(slurp(corpus(corpus_name)), cfg);
}

} // namespace fixtures

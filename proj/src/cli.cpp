#include "relct/cli.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "relct/engine.hpp"
#include "relct/report.hpp"
#include "relct/wat.hpp"

namespace relct::cli {

namespace {

constexpr int kUsage = 3;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error("IoError", "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Points the entry at another function. Annotated arguments are kept when
// the arity still fits; otherwise every parameter becomes a public symbol.
void override_entry(ModuleAst& ast, std::string name) {
  if (!name.empty() && name[0] == '$')
    name.erase(0, 1);
  auto idx = ast.find_function(name);
  if (!idx)
    throw EntryError("UnknownFunction", "entry function '" + name + "' not found");
  const FuncDef& f = ast.functions[*idx];
  if (ast.entry && ast.entry->args.size() == f.params.size()) {
    ast.entry->function_name = name;
    return;
  }
  EntrySpec spec;
  spec.function_name = name;
  for (size_t i = 0; i < f.params.size(); ++i)
    spec.args.push_back(SymbolicArg{"l_arg" + std::to_string(i), Secrecy::Public, f.params[i]});
  ast.entry = spec;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CliOptions o;
  CLI::App app{"Constant-time verification of WebAssembly text modules"};
  app.add_option("inputs", o.inputs, "WAT files forming one module set")
      ->required()
      ->check(CLI::ExistingFile);
  app.add_option("--entry", o.entry, "Entry function, overriding symb_exec");
  app.add_option("--unroll-limit", o.unroll_limit, "Loop iterations per loop per path")
      ->check(CLI::PositiveNumber);
  app.add_flag("--invariants", o.invariants, "Summarise loops with relational invariants");
  app.add_flag("--select-unsafe", o.select_unsafe, "Check select conditions like branches");
  app.add_option("--portfolio-threshold", o.portfolio_threshold,
                 "Expression count above which the portfolio answers")
      ->check(CLI::PositiveNumber);
  app.add_option("--timeout", o.timeout, "Wall-clock budget in seconds")
      ->check(CLI::PositiveNumber);
  app.add_option("--solver-config", o.solver_config, "Solver backend file");
  app.add_option("--format", o.format, "Report format")
      ->check(CLI::IsMember({"text", "json"}));
  app.add_flag("--stats", o.stats, "Print all counters");
  app.add_option("--path-limit", o.path_limit, "Stop after this many paths (0: no limit)");
  app.add_flag("--no-cache", o.no_cache, "Disable the simplification memo table");
  app.add_option("--feasibility", o.feasibility, "Path feasibility checks")
      ->check(CLI::IsMember({"at_branch", "never"}));

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "relct: " << e.what() << "\n" << app.help();
    return kUsage;
  }

  try {
    std::vector<std::string> sources;
    for (const std::string& p : o.inputs)
      sources.push_back(read_file(p));
    ModuleAst ast = wat::parse_modules(sources);
    if (!o.entry.empty())
      override_entry(ast, o.entry);
    wat::resolve_entry(ast);

    SolverConfig scfg = o.solver_config.empty() ? SolverConfig::defaults()
                                                : SolverConfig::load(o.solver_config);
    scfg.timeout = std::min(scfg.timeout, o.timeout);
    Solver solver(scfg);

    EngineConfig cfg;
    cfg.unroll_limit = o.unroll_limit;
    cfg.path_limit = o.path_limit;
    cfg.time_budget = o.timeout;
    cfg.select_unsafe = o.select_unsafe;
    cfg.invariants = o.invariants;
    cfg.portfolio_threshold = o.portfolio_threshold;
    cfg.feasibility =
        o.feasibility == "never" ? FeasibilityPolicy::Never : FeasibilityPolicy::AtBranch;
    cfg.use_cache = !o.no_cache;

    AnalysisReport rep = make_report(ast, explore(ast, cfg, solver));
    out << (o.format == "json" ? render_json(rep) : render_text(rep, o.stats));
    return exit_code(rep);
  } catch (const Error& e) {
    err << "relct: " << e.kind() << ": " << e.what() << "\n";
  } catch (const std::exception& e) {
    err << "relct: " << e.what() << "\n";
  }
  return kUsage;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

} // namespace relct::cli

#include <gtest/gtest.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "oracle.hpp"
#include "relct/error.hpp"
#include "relct/solver.hpp"

using namespace relct;

namespace {

// A shell stub that swallows the script and prints `reply` after `delay`.
SolverCommand stub(const std::string& name, const std::string& reply, double delay = 0) {
  std::string cmd = "cat >/dev/null; ";
  if (delay > 0)
    cmd += "sleep " + std::to_string(delay) + "; ";
  cmd += "printf '" + reply + "'";
  return {name, {"/bin/sh", "-c", cmd}};
}

SolverConfig z3_only() {
  SolverConfig cfg;
  cfg.small = {"z3", {"z3", "-in"}};
  cfg.portfolio = {cfg.small};
  return cfg;
}

// a + s1 + ... + sn = 7 over 32-bit symbols: 3 + 2n DAG nodes.
QueryFormula sized(ExprContext& ctx, size_t n) {
  const Node* x = ctx.sym("a", Side::Shared, 32);
  for (size_t i = 0; i < n; ++i)
    x = ctx.bin(Kind::Add, x, ctx.sym("s" + std::to_string(i), Side::Shared, 32));
  return make_query(QueryKind::BranchDivergence, {ctx.bin(Kind::Eq, x, ctx.constant(7, 32))});
}

bool holds(const std::vector<const Node*>& assertions, const oracle::Env& env) {
  for (const Node* a : assertions)
    if (oracle::eval(a, env) != 1)
      return false;
  return true;
}

} // namespace

TEST(SolverConfig, Parse) {
  SolverConfig c = SolverConfig::parse(
      "# comment\n\nsmall: z3 -in\nz3: z3 -in\ncvc5: python3 shim.py\ntimeout: 2.5\nthreshold: 40\njobs: 3\n");
  EXPECT_EQ(c.small, (SolverCommand{"z3", {"z3", "-in"}}));
  ASSERT_EQ(c.portfolio.size(), 2u);
  EXPECT_EQ(c.portfolio[1], (SolverCommand{"cvc5", {"python3", "shim.py"}}));
  EXPECT_DOUBLE_EQ(c.timeout, 2.5);
  EXPECT_EQ(c.threshold, 40u);
  EXPECT_EQ(c.jobs, 3u);
  EXPECT_GE(SolverConfig::parse("small: z3 -in\n").jobs, 2u);
}

TEST(SolverConfig, Errors) {
  auto kind = [](const char* text) {
    try {
      SolverConfig::parse(text);
    } catch (const Error& e) {
      return std::string(e.kind());
    }
    return std::string();
  };
  EXPECT_EQ(kind("small z3\n"), "ConfigError");
  EXPECT_EQ(kind("z3: z3 -in\n"), "ConfigError");
  EXPECT_EQ(kind("small:\n"), "ConfigError");
}

TEST(SolverParse, Answers) {
  EXPECT_EQ(parse_answer("unsat\n").status, SolverStatus::Unsat);
  EXPECT_EQ(parse_answer("unknown\n").status, SolverStatus::Unknown);
  EXPECT_EQ(parse_answer("").status, SolverStatus::Error);
  EXPECT_EQ(parse_answer("(error \"boom\")").status, SolverStatus::Error);
  EXPECT_EQ(parse_answer("sat\n").status, SolverStatus::Error);
  EXPECT_EQ(parse_answer("sat\n((x #xzz))").status, SolverStatus::Error);

  SolverAnswer v = parse_answer("sat\n((h_L #x05) (h_R #x06) (b true))\n");
  ASSERT_EQ(v.status, SolverStatus::Sat);
  EXPECT_EQ(v.model->value_of("h_L"), 5u);
  EXPECT_EQ(v.model->value_of("h_R"), 6u);
  EXPECT_EQ(v.model->value_of("b"), 1u);
  EXPECT_EQ(v.model->value_of("missing"), 0u);

  SolverAnswer m = parse_answer(
      "sat\n(\n  (define-fun l1 () (_ BitVec 32)\n    #x0000002a)\n"
      "  (define-fun h_L () (_ BitVec 8) #b00000011)\n)\n");
  ASSERT_EQ(m.status, SolverStatus::Sat);
  EXPECT_EQ(m.model->value_of("l1"), 42u);
  EXPECT_EQ(m.model->value_of("h_L"), 3u);
}

TEST(SolverParse, ArrayValues) {
  Model m = parse_model(
      "((M0 (store ((as const (Array (_ BitVec 32) (_ BitVec 8))) #x07) #x00000006 #x09))\n"
      " (x #xff))");
  EXPECT_EQ(m.byte_of("M0", 6), 9);
  EXPECT_EQ(m.byte_of("M0", 5), 7);
  EXPECT_EQ(m.byte_of("M0", 1000), 7);
  EXPECT_EQ(m.value_of("x"), 255u);
}

TEST(SolverEncode, SymbolNames) {
  EXPECT_EQ(smt_symbol("h1", Side::L), "h1_L");
  EXPECT_EQ(smt_symbol("h1", Side::R), "h1_R");
  EXPECT_EQ(smt_symbol("l1", Side::Shared), "l1");
  EXPECT_EQ(array_symbol(0, Side::Shared), "M0");
}

TEST(SolverEncode, RejectsNonBooleanAssertion) {
  ExprContext ctx;
  QueryFormula q = make_query(QueryKind::Feasibility, {ctx.sym("a", Side::Shared, 8)});
  EXPECT_ANY_THROW(encode_smtlib(q));
}

TEST(SolverEncode, ExprCountIsDagSize) {
  ExprContext ctx;
  EXPECT_EQ(sized(ctx, 748).expr_count, 1499u);
  EXPECT_EQ(sized(ctx, 749).expr_count, 1501u);
}

// The encoding is equisatisfiable with the formula: brute force over two
// bytes decides each query, and every model satisfies the reference
// semantics.
TEST(SolverProperty, EncodingMatchesBruteForce) {
  Solver solver(z3_only());
  oracle::Gen gen(11);
  ExprContext ctx;
  const Node* a = ctx.sym("a", Side::Shared, 8);
  const Node* b = ctx.sym("h", Side::L, 8);
  int sat = 0, unsat = 0;
  for (int i = 0; i < 60; ++i) {
    std::vector<const Node*> as = {gen.cond(ctx, {a, b}, 3)};
    if (gen.pick(2))
      as.push_back(gen.cond(ctx, {a, b}, 2));
    bool expect = false;
    for (uint64_t x = 0; x < 256 && !expect; ++x)
      for (uint64_t y = 0; y < 256 && !expect; ++y) {
        oracle::Env env;
        env.values["a"] = x;
        env.values["h_L"] = y;
        expect = holds(as, env);
      }
    SolverAnswer ans = solver.run_small(make_query(QueryKind::Feasibility, as));
    ASSERT_EQ(ans.status, expect ? SolverStatus::Sat : SolverStatus::Unsat)
        << to_string(as[0]) << "\n" << ans.detail;
    if (expect) {
      ++sat;
      EXPECT_TRUE(holds(as, oracle::Env::from_model(*ans.model))) << to_string(as[0]);
    } else {
      ++unsat;
    }
  }
  EXPECT_GT(sat, 0);
  EXPECT_GT(unsat, 0);
}

// Reads over store chains with constant and symbolic indices.
TEST(SolverProperty, ArrayModelsSatisfyFormula) {
  Solver solver(z3_only());
  oracle::Gen gen(21);
  ExprContext ctx;
  const Node* i = ctx.sym("i", Side::Shared, 32);
  const Node* v = ctx.sym("v", Side::Shared, 8);
  int sat = 0;
  for (int round = 0; round < 40; ++round) {
    const Node* arr = ctx.array(0, Side::Shared);
    for (int k = 0; k < 6; ++k) {
      const Node* idx = gen.pick(3) ? ctx.constant(gen.pick(8), 32) : i;
      const Node* val = gen.pick(2) ? ctx.constant(gen.pick(256), 8) : v;
      arr = ctx.store(arr, idx, val);
    }
    const Node* r1 = ctx.select(arr, gen.pick(2) ? ctx.constant(gen.pick(8), 32) : i);
    const Node* r2 = ctx.select(arr, ctx.constant(gen.pick(8), 32));
    std::vector<const Node*> as = {ctx.bin(Kind::Ne, r1, r2),
                                   ctx.bin(Kind::LtU, i, ctx.constant(8, 32))};
    QueryFormula q = make_query(QueryKind::Feasibility, as);
    SolverAnswer ans = solver.run_small(q);
    ASSERT_TRUE(ans.status == SolverStatus::Sat || ans.status == SolverStatus::Unsat)
        << ans.detail;
    if (ans.status == SolverStatus::Sat) {
      ++sat;
      oracle::Env env = oracle::Env::from_model(*ans.model);
      EXPECT_TRUE(holds(as, env)) << smtlib_script(q);
    } else {
      // No index in range with any value may satisfy it either.
      for (uint64_t x = 0; x < 8; ++x)
        for (uint64_t y : {0u, 1u, 77u, 255u}) {
          oracle::Env env;
          env.values["i"] = x;
          env.values["v"] = y;
          for (uint32_t k = 0; k < 8; ++k)
            env.arrays["M0"][k] = uint8_t(gen.pick(256));
          EXPECT_FALSE(holds(as, env)) << smtlib_script(q);
        }
    }
  }
  EXPECT_GT(sat, 0);
}

TEST(Solver, IncrementalSessionSurvivesManyQueries) {
  Solver solver(z3_only());
  ExprContext ctx;
  const Node* a = ctx.sym("a", Side::Shared, 32);
  for (uint64_t k = 0; k < 30; ++k) {
    const Node* eq = ctx.bin(Kind::Eq, a, ctx.constant(k, 32));
    SolverAnswer s = solver.run_small(make_query(QueryKind::Feasibility, {eq}));
    ASSERT_EQ(s.status, SolverStatus::Sat);
    EXPECT_EQ(s.model->value_of("a"), k);
    const Node* both = ctx.bin(Kind::Ne, a, a);
    EXPECT_EQ(solver.run_small(make_query(QueryKind::Feasibility, {eq, both})).status,
              SolverStatus::Unsat);
  }
}

TEST(Solver, ThresholdRouting) {
  SolverConfig cfg = z3_only();
  cfg.portfolio = {stub("fast", "unsat\\n")};
  Solver solver(cfg);
  ExprContext ctx;
  SolverAnswer below = solver.dispatch(sized(ctx, 748));
  EXPECT_FALSE(below.portfolio);
  EXPECT_EQ(below.responder, "z3");
  EXPECT_EQ(below.status, SolverStatus::Sat);
  SolverAnswer above = solver.dispatch(sized(ctx, 749));
  EXPECT_TRUE(above.portfolio);
  EXPECT_EQ(above.responder, "fast");
  EXPECT_EQ(above.status, SolverStatus::Unsat);
}

TEST(Solver, PortfolioTakesFirstDefinitiveAnswer) {
  SolverConfig cfg = z3_only();
  cfg.portfolio = {stub("slow", "unsat\\n", 10), stub("broken", "(error x)\\n"),
                   stub("fast", "sat\\n((a #x00000007))\\n", 0.1)};
  Solver solver(cfg);
  ExprContext ctx;
  auto t0 = std::chrono::steady_clock::now();
  SolverAnswer ans = solver.run_portfolio(sized(ctx, 0));
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_LT(secs, 1.0);
  EXPECT_EQ(ans.responder, "fast");
  ASSERT_EQ(ans.status, SolverStatus::Sat);
  EXPECT_EQ(ans.model->value_of("a"), 7u);
  // Cancellation leaves the next query unaffected.
  SolverAnswer again = solver.run_portfolio(sized(ctx, 0));
  EXPECT_EQ(again.responder, "fast");
}

TEST(Solver, QueuedWorkersStartWhenOthersGiveUp) {
  SolverConfig cfg = z3_only();
  cfg.jobs = 1;
  cfg.portfolio = {stub("broken", "(error x)\\n"), stub("unknown", "unknown\\n"),
                   stub("last", "unsat\\n")};
  Solver solver(cfg);
  ExprContext ctx;
  SolverAnswer ans = solver.run_portfolio(sized(ctx, 0));
  EXPECT_EQ(ans.responder, "last");
  EXPECT_EQ(ans.status, SolverStatus::Unsat);
}

TEST(Solver, PortfolioTimeout) {
  SolverConfig cfg = z3_only();
  cfg.timeout = 0.5;
  cfg.portfolio = {stub("slow", "sat\\n", 10)};
  Solver solver(cfg);
  ExprContext ctx;
  auto t0 = std::chrono::steady_clock::now();
  SolverAnswer ans = solver.run_portfolio(sized(ctx, 0));
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_EQ(ans.status, SolverStatus::Timeout);
  EXPECT_LT(secs, 2.0);
}

TEST(Solver, MissingBackendIsError) {
  SolverConfig cfg;
  cfg.small = {"nope", {"/nonexistent/solver"}};
  Solver solver(cfg);
  ExprContext ctx;
  SolverAnswer ans = solver.run_small(sized(ctx, 0));
  EXPECT_EQ(ans.status, SolverStatus::Error);
}

#include <gtest/gtest.h>

#include <chrono>

#include "fixtures.hpp"
#include "soundness.hpp"

using namespace relct;

namespace {

size_t count(const AnalysisResult& r, VerdictKind k) {
  size_t n = 0;
  for (const Verdict& v : r.verdicts)
    n += v.kind == k;
  return n;
}

// k sequential diamonds on public inputs.
std::string diamonds(int k) {
  std::string body;
  for (int i = 0; i < k; ++i)
    body += "    local.get " + std::to_string(i) +
            "\n    if\n      local.get 0\n      drop\n    end\n";
  std::string params, args;
  for (int i = 0; i < k; ++i) {
    params += " i32";
    args += " (i32.sconst l" + std::to_string(i) + ")";
  }
  return "(module (memory 1)\n  (func $f (param" + params + ")\n" + body + "  ))\n(symb_exec \"f\"" +
         args + ")\n";
}

} // namespace

TEST(Engine, SecretMinusSecretNeedsNoSolver) {
  fixtures::Run r = fixtures::analyze_source(R"(
(module (memory 1)
  (func $f (param $h i32) (result i32)
    local.get $h
    local.get $h
    i32.sub
    if (result i32)
      i32.const 1
    else
      i32.const 0
    end))
(symb_exec "f" (i32.sconst h1))
)");
  EXPECT_EQ(count(r.result, VerdictKind::Violation), 0u);
  EXPECT_GE(r.result.counters.formulas_simplified, 1u);
  EXPECT_EQ(r.result.counters.solver_queries, 0u);
  EXPECT_EQ(exit_code(r.report), 0);
}

TEST(Engine, SecretBranchIsViolation) {
  fixtures::Run r = fixtures::analyze("naive_select.wat");
  ASSERT_EQ(count(r.result, VerdictKind::Violation), 1u);
  EXPECT_EQ(r.report.verdicts[0].site.op, "if");
  ASSERT_EQ(r.report.replays.size(), 1u);
  EXPECT_TRUE(r.report.replays[0].confirmed) << r.report.replays[0].reason;
}

TEST(Engine, PathCountIsTwoToTheK) {
  for (int k = 1; k <= 6; ++k) {
    fixtures::Run r = fixtures::analyze_source(diamonds(k));
    EXPECT_EQ(r.result.counters.paths_explored, uint64_t(1) << k) << k;
    EXPECT_TRUE(r.result.complete);
  }
}

TEST(Engine, Deterministic) {
  for (const char* name : {"sort3.wat", "padding_loop.wat"}) {
    EngineConfig cfg;
    cfg.invariants = true;
    fixtures::Run a = fixtures::analyze(name, cfg);
    fixtures::Run b = fixtures::analyze(name, cfg);
    a.report.counters.wall_time = b.report.counters.wall_time = 0;
    EXPECT_EQ(a.report, b.report) << name;
  }
}

TEST(Engine, CacheIsTransparent) {
  for (const char* name : {"sort3.wat", "sort3_multiplex.wat", "ct_select_v3.wat"}) {
    EngineConfig on, off;
    off.use_cache = false;
    fixtures::Run a = fixtures::analyze(name, on);
    fixtures::Run b = fixtures::analyze(name, off);
    a.report.counters.wall_time = b.report.counters.wall_time = 0;
    EXPECT_EQ(a.report, b.report) << name;
  }
}

TEST(Engine, SolverQueriesNeverExceedFormulas) {
  for (const char* name : {"ct_select_v1.wat", "sort3.wat", "sort3_negative.wat"}) {
    fixtures::Run r = fixtures::analyze(name);
    EXPECT_LE(r.result.counters.solver_queries, r.result.counters.formulas_simplified) << name;
  }
}

// A symbolic divisor is assumed nonzero; a divisor known to be zero traps.
TEST(Engine, DivisionConstrainsOrTraps) {
  fixtures::Run sym = fixtures::analyze_source(R"(
(module (memory 1)
  (func $f (param $a i32) (param $b i32) (result i32)
    local.get $a
    local.get $b
    i32.div_u
    drop
    local.get $b
    i32.eqz
    if (result i32)
      unreachable
    else
      i32.const 1
    end))
(symb_exec "f" (i32.sconst l1) (i32.sconst l2))
)");
  EXPECT_EQ(count(sym.result, VerdictKind::Trap), 0u);
  EXPECT_EQ(sym.result.counters.paths_explored, 1u);

  fixtures::Run zero = fixtures::analyze_source(R"(
(module (memory 1)
  (func $f (param $a i32) (result i32)
    local.get $a
    i32.const 0
    i32.rem_s))
(symb_exec "f" (i32.sconst l1))
)");
  ASSERT_EQ(count(zero.result, VerdictKind::Trap), 1u);
  EXPECT_EQ(zero.result.verdicts[0].detail, "integer divide by zero");
}

TEST(Engine, SecretBrTableIndexIsViolation) {
  fixtures::Run r = fixtures::analyze_source(R"(
(module (memory 1)
  (func $f (param $h i32) (result i32)
    block
      block
        local.get $h
        br_table 0 1
      end
      i32.const 1
      return
    end
    i32.const 2))
(symb_exec "f" (i32.sconst h1))
)");
  ASSERT_EQ(count(r.result, VerdictKind::Violation), 1u);
  EXPECT_EQ(r.report.verdicts[0].check, CheckKind::BrTable);
  EXPECT_TRUE(r.report.replays[0].confirmed) << r.report.replays[0].reason;
}

TEST(Engine, SecretIndexedLoadIsViolation) {
  fixtures::Run r = fixtures::analyze_source(R"(
(module (memory 1)
  (func $f (param $h i32) (result i32)
    local.get $h
    i32.const 255
    i32.and
    i32.load8_u))
(symb_exec "f" (i32.sconst h1))
)");
  ASSERT_EQ(count(r.result, VerdictKind::Violation), 1u);
  EXPECT_EQ(r.report.verdicts[0].check, CheckKind::MemoryIndex);
  EXPECT_TRUE(r.report.replays[0].confirmed) << r.report.replays[0].reason;
}

TEST(Engine, SelectIsCheckedOnlyOnRequest) {
  const std::string src = R"(
(module (memory 1)
  (func $f (param $h i32) (result i32)
    i32.const 1
    i32.const 2
    local.get $h
    select))
(symb_exec "f" (i32.sconst h1))
)";
  fixtures::Run lax = fixtures::analyze_source(src);
  EXPECT_EQ(count(lax.result, VerdictKind::Violation), 0u);
  EngineConfig cfg;
  cfg.select_unsafe = true;
  fixtures::Run strict = fixtures::analyze_source(src, cfg);
  ASSERT_EQ(count(strict.result, VerdictKind::Violation), 1u);
  EXPECT_EQ(strict.report.verdicts[0].check, CheckKind::Select);
  EXPECT_TRUE(strict.report.replays[0].confirmed) << strict.report.replays[0].reason;
}

TEST(Engine, UnrollLimitMakesResultIncomplete) {
  EngineConfig cfg;
  cfg.unroll_limit = 2;
  fixtures::Run r = fixtures::analyze("padding_loop.wat", cfg);
  EXPECT_FALSE(r.result.complete);
  EXPECT_EQ(exit_code(r.report), 1);
}

// Engine-flagged sites equal the sites where some pair of executions that
// agree on public input and on every earlier observation first disagree.
TEST(EngineProperty, MicroProgramsMatchEnumeration) {
  auto start = std::chrono::steady_clock::now();
  for (uint32_t seed = 0; seed < 24; ++seed) {
    soundness::Outcome o = soundness::check(seed);
    EXPECT_TRUE(o.complete) << "seed " << seed;
    EXPECT_FALSE(o.unknown) << "seed " << seed;
    EXPECT_EQ(o.flagged, o.leaks) << "seed " << seed << "\n" << o.source;
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_LT(secs, 60.0);
}

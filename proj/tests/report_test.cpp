#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "relct/error.hpp"

using namespace relct;

namespace {

const Verdict* first_violation(const AnalysisReport& r) {
  for (const Verdict& v : r.verdicts)
    if (v.kind == VerdictKind::Violation)
      return &v;
  return nullptr;
}

} // namespace

TEST(Report, JsonRoundTrips) {
  EngineConfig inv;
  inv.invariants = true;
  std::vector<fixtures::Run> runs = {
      fixtures::analyze("ct_select_v2.wat"), fixtures::analyze("sort3.wat"),
      fixtures::analyze("padding_loop.wat", inv), fixtures::analyze("invariant_leak.wat", inv)};
  for (const fixtures::Run& r : runs) {
    std::string text = render_json(r.report);
    AnalysisReport back = report_from_json(text);
    EXPECT_EQ(back, r.report) << text;
    EXPECT_EQ(render_json(back), text);
  }
}

TEST(Report, JsonSchema) {
  fixtures::Run r = fixtures::analyze("sort3.wat");
  nlohmann::json j = nlohmann::json::parse(render_json(r.report));
  EXPECT_EQ(j["schema"], "relct-report/1");
  EXPECT_EQ(j["verified"], false);
  EXPECT_EQ(j["violations"].get<size_t>(), r.report.violations());
  for (const char* k : {"formulas_simplified", "solver_queries", "paths_explored", "loc_visited",
                        "wall_time"})
    EXPECT_TRUE(j["counters"].contains(k)) << k;
  size_t flagged = 0;
  for (const auto& v : j["verdicts"])
    if (v["kind"] == "Violation") {
      ++flagged;
      EXPECT_TRUE(v.contains("model"));
      EXPECT_EQ(v["replay"]["confirmed"], true);
    }
  EXPECT_EQ(flagged, r.report.violations());
}

TEST(Report, MalformedJsonIsRejected) {
  auto kind = [](const std::string& text) {
    try {
      report_from_json(text);
    } catch (const Error& e) {
      return std::string(e.kind());
    }
    return std::string();
  };
  EXPECT_EQ(kind("{"), "ReportFormat");
  EXPECT_EQ(kind("{}"), "ReportFormat");
  std::string good = render_json(fixtures::analyze("naive_select.wat").report);
  nlohmann::json j = nlohmann::json::parse(good);
  j["schema"] = "other/9";
  EXPECT_EQ(kind(j.dump()), "ReportFormat");
  j = nlohmann::json::parse(good);
  j["verdicts"][0]["kind"] = "Maybe";
  EXPECT_EQ(kind(j.dump()), "ReportFormat");
}

TEST(Report, TextRendering) {
  fixtures::Run safe = fixtures::analyze("ct_select_v1.wat");
  std::string t = render_text(safe.report, true);
  EXPECT_NE(t.find("Verify CT ✓"), std::string::npos) << t;
  EXPECT_NE(t.find("#FS "), std::string::npos);
  EXPECT_NE(t.find("#SS "), std::string::npos);
  EXPECT_NE(t.find("wall time"), std::string::npos);
  EXPECT_EQ(render_text(safe.report, false).find("wall time"), std::string::npos);

  fixtures::Run bad = fixtures::analyze("naive_select.wat");
  std::string u = render_text(bad.report, false);
  EXPECT_NE(u.find("Verify CT ✗  1 violation site\n"), std::string::npos) << u;
  EXPECT_NE(u.find("Violation Branch at 6:5 if in naive_select"), std::string::npos) << u;
  EXPECT_NE(u.find("h_c_L="), std::string::npos) << u;
  EXPECT_NE(u.find("replay: confirmed"), std::string::npos) << u;
}

TEST(Report, ExitCodes) {
  AnalysisReport r;
  EXPECT_EQ(exit_code(r), 0);
  r.complete = false;
  r.reason = "time_budget";
  EXPECT_EQ(exit_code(r), 2);
  Verdict v;
  v.kind = VerdictKind::Violation;
  r.verdicts.push_back(v);
  EXPECT_EQ(exit_code(r), 1);
  r.complete = true;
  EXPECT_EQ(exit_code(r), 1);
}

TEST(Report, TimeBudgetIsIncomplete) {
  EngineConfig cfg;
  cfg.time_budget = 0;
  fixtures::Run r = fixtures::analyze("lucky13_O0.wat", cfg);
  EXPECT_FALSE(r.report.complete);
  EXPECT_EQ(r.report.reason, "time_budget");
  EXPECT_EQ(exit_code(r.report), 2);
  nlohmann::json j = nlohmann::json::parse(render_json(r.report));
  EXPECT_EQ(j["completion"]["reason"], "time_budget");
}

TEST(Report, DuplicatesMergePerSite) {
  fixtures::Run r = fixtures::analyze("lucky13_O0.wat", [] {
    EngineConfig c;
    c.invariants = true;
    return c;
  }());
  std::set<std::tuple<uint32_t, int, int>> keys;
  for (const Verdict& v : r.report.verdicts)
    EXPECT_TRUE(keys.insert({v.site.instr, int(v.check), int(v.kind)}).second);
  EXPECT_EQ(r.report.replays.size(), r.report.violations());
}

TEST(Replay, BogusModelWithEqualSecretsIsRefuted) {
  fixtures::Run r = fixtures::analyze("naive_select.wat");
  const Verdict* v = first_violation(r.report);
  ASSERT_NE(v, nullptr);
  Model same;
  for (const char* h : {"h_c", "h_a", "h_b"}) {
    same.values[std::string(h) + "_L"] = 5;
    same.values[std::string(h) + "_R"] = 5;
  }
  ReplayResult rr = replay(r.ast, same, *v);
  EXPECT_FALSE(rr.confirmed);
  Model diff = same;
  diff.values["h_c_R"] = 0;
  EXPECT_TRUE(replay(r.ast, diff, *v).confirmed);
}

TEST(Replay, TrapBeforeSiteIsRefuted) {
  ModuleAst ast = wat::parse_module(R"(
(module (memory 1)
  (func $f (param $h i32) (param $d i32) (result i32)
    i32.const 10
    local.get $d
    i32.div_u
    drop
    local.get $h
    if (result i32)
      i32.const 1
    else
      i32.const 0
    end))
(symb_exec "f" (i32.sconst h1) (i32.sconst l1))
)");
  fixtures::Run r = fixtures::analyze_source(wat::print_module(ast));
  const Verdict* v = first_violation(r.report);
  ASSERT_NE(v, nullptr);
  EXPECT_TRUE(r.report.replays.at(0).confirmed);
  Model m = *v->model;
  m.values["l1"] = 0;
  ReplayResult rr = replay(r.ast, m, *v);
  EXPECT_FALSE(rr.confirmed);
  EXPECT_NE(rr.reason.find("trap"), std::string::npos) << rr.reason;
}

TEST(Concrete, InterpreterComputesResults) {
  ModuleAst ast = wat::parse_module(R"(
(module (memory 1)
  (data (i32.const 8) "\05\00\00\00")
  (func $f (param $x i32) (result i32) (local $acc i32)
    block
      loop
        local.get $x
        i32.eqz
        br_if 1
        local.get $acc
        local.get $x
        i32.add
        local.set $acc
        local.get $x
        i32.const 1
        i32.sub
        local.set $x
        br 0
      end
    end
    local.get $acc
    i32.const 8
    i32.load
    i32.mul))
(symb_exec "f" (i32.sconst l1))
)");
  Valuation in;
  in.args = {10};
  in.memory.assign(65536, 0);
  in.memory[8] = 5;
  ConcreteRun run = run_concrete(ast, 0, in, UINT32_MAX);
  ASSERT_FALSE(run.trapped) << run.trap;
  ASSERT_EQ(run.results.size(), 1u);
  EXPECT_EQ(run.results[0], 55u * 5u);
}

TEST(Concrete, ValuationFromModel) {
  ModuleAst ast = fixtures::load("padding_loop.wat");
  Model m;
  m.values["h_m0_2050_L"] = 9;
  m.values["h_m0_2050_R"] = 4;
  m.values["l1"] = 77;
  m.arrays["M0"].fallback = 3;
  Valuation l = valuation_from_model(ast, m, Side::L);
  Valuation r = valuation_from_model(ast, m, Side::R);
  EXPECT_EQ(l.memory.at(2050), 9);
  EXPECT_EQ(r.memory.at(2050), 4);
  EXPECT_EQ(l.memory.at(2040), 0x40); // data segment
  EXPECT_EQ(l.memory.at(100), 3);     // shared array default
  EXPECT_EQ(l.args, r.args);
  EXPECT_EQ(l.args.at(2), 77u);
}

#include "relct/report.hpp"

#include <bit>
#include <climits>
#include <map>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "relct/wat.hpp"

namespace relct {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Concrete interpreter

namespace {

struct TrapSignal {
  std::string why;
};

uint64_t mask_of(unsigned w) { return w >= 64 ? ~uint64_t(0) : (uint64_t(1) << w) - 1; }

int64_t signed_of(uint64_t v, unsigned w) {
  if (w >= 64)
    return int64_t(v);
  uint64_t sign = uint64_t(1) << (w - 1);
  v &= mask_of(w);
  return int64_t((v ^ sign) - sign);
}

class Interp {
public:
  Interp(const ModuleAst& ast, const Valuation& in, uint32_t watch, uint64_t limit)
      : ast_(ast), mem_(in.memory), globals_(in.globals), watch_(watch), limit_(limit) {}

  std::vector<uint64_t> call(uint32_t f, const std::vector<uint64_t>& args) {
    if (++depth_ > 10000)
      throw TrapSignal{"call stack exhausted"};
    const FuncDef& fn = ast_.functions[f];
    std::vector<uint64_t> locals = args;
    locals.resize(fn.num_locals(), 0);
    size_t base = st_.size();
    seq(fn.body, locals);
    std::vector<uint64_t> out(st_.end() - fn.results.size(), st_.end());
    st_.resize(base);
    --depth_;
    return out;
  }

  std::vector<uint64_t> obs;

private:
  static constexpr int kNormal = -1;
  static constexpr int kReturn = INT_MAX;

  uint64_t pop() {
    uint64_t v = st_.back();
    st_.pop_back();
    return v;
  }

  void observe(const Instr& in, uint64_t v) {
    if (in.id == watch_)
      obs.push_back(v);
  }

  int seq(const std::vector<Instr>& body, std::vector<uint64_t>& locals) {
    for (const Instr& in : body) {
      if (++steps_ > limit_)
        throw TrapSignal{"step limit reached"};
      int r = exec(in, locals);
      if (r != kNormal)
        return r;
    }
    return kNormal;
  }

  // Leaves a block after a branch of relative depth r.
  int leave(int r, size_t height, unsigned arity) {
    if (r == kNormal || r == kReturn)
      return r;
    if (r == 0) {
      std::vector<uint64_t> keep(st_.end() - arity, st_.end());
      st_.resize(height);
      st_.insert(st_.end(), keep.begin(), keep.end());
      return kNormal;
    }
    return r - 1;
  }

  uint64_t address(const Instr& in, unsigned bytes) {
    uint64_t ea = (pop() & 0xffffffffu) + uint64_t(in.offset);
    observe(in, ea);
    if (ea + bytes > mem_.size())
      throw TrapSignal{"out-of-bounds memory access"};
    return ea;
  }

  uint64_t binary(Arith a, uint64_t x, uint64_t y, unsigned w) {
    uint64_t m = mask_of(w);
    int64_t sx = signed_of(x, w), sy = signed_of(y, w);
    unsigned k = unsigned(y % w);
    switch (a) {
    case Arith::Add: return (x + y) & m;
    case Arith::Sub: return (x - y) & m;
    case Arith::Mul: return (x * y) & m;
    case Arith::DivU:
      if (y == 0)
        throw TrapSignal{"integer divide by zero"};
      return x / y;
    case Arith::RemU:
      if (y == 0)
        throw TrapSignal{"integer divide by zero"};
      return x % y;
    case Arith::DivS:
      if (y == 0)
        throw TrapSignal{"integer divide by zero"};
      if (sy == -1 && sx == signed_of(uint64_t(1) << (w - 1), w))
        throw TrapSignal{"integer overflow"};
      return uint64_t(sx / sy) & m;
    case Arith::RemS:
      if (y == 0)
        throw TrapSignal{"integer divide by zero"};
      if (sy == -1)
        return 0;
      return uint64_t(sx % sy) & m;
    case Arith::And: return x & y;
    case Arith::Or: return x | y;
    case Arith::Xor: return x ^ y;
    case Arith::Shl: return (x << k) & m;
    case Arith::ShrU: return x >> k;
    case Arith::ShrS: return uint64_t(sx >> k) & m;
    case Arith::Rotl: return k == 0 ? x : ((x << k) | (x >> (w - k))) & m;
    case Arith::Rotr: return k == 0 ? x : ((x >> k) | (x << (w - k))) & m;
    case Arith::Eq: return x == y;
    case Arith::Ne: return x != y;
    case Arith::LtS: return sx < sy;
    case Arith::LtU: return x < y;
    case Arith::GtS: return sx > sy;
    case Arith::GtU: return x > y;
    case Arith::LeS: return sx <= sy;
    case Arith::LeU: return x <= y;
    case Arith::GeS: return sx >= sy;
    case Arith::GeU: return x >= y;
    default: throw TrapSignal{"unsupported operator"};
    }
  }

  uint64_t unary(Arith a, uint64_t x, unsigned w) {
    uint64_t m = mask_of(w);
    switch (a) {
    case Arith::Eqz: return x == 0;
    case Arith::Clz: return w == 32 ? std::countl_zero(uint32_t(x)) : std::countl_zero(x);
    case Arith::Ctz: return w == 32 ? std::countr_zero(uint32_t(x)) : std::countr_zero(x);
    case Arith::Popcnt: return std::popcount(x);
    case Arith::Ext8S: return uint64_t(signed_of(x, 8)) & m;
    case Arith::Ext16S: return uint64_t(signed_of(x, 16)) & m;
    case Arith::Ext32S: return uint64_t(signed_of(x, 32)) & m;
    case Arith::Wrap: return x & 0xffffffffu;
    case Arith::ExtendS: return uint64_t(signed_of(x, 32));
    case Arith::ExtendU: return x & 0xffffffffu;
    default: throw TrapSignal{"unsupported operator"};
    }
  }

  int exec(const Instr& in, std::vector<uint64_t>& locals) {
    const OpInfo& info = op_info(in.op);
    unsigned w = bit_width(info.type);
    switch (in.op) {
    case Op::Unreachable: throw TrapSignal{"unreachable executed"};
    case Op::Nop: return kNormal;
    case Op::Block: {
      size_t h = st_.size();
      return leave(seq(in.body, locals), h, in.result ? 1 : 0);
    }
    case Op::Loop: {
      size_t h = st_.size();
      while (true) {
        int r = seq(in.body, locals);
        if (r != 0)
          return r == kNormal || r == kReturn ? r : r - 1;
        st_.resize(h);
      }
    }
    case Op::If: {
      uint64_t c = pop();
      observe(in, c != 0);
      size_t h = st_.size();
      return leave(seq(c != 0 ? in.body : in.else_body, locals), h, in.result ? 1 : 0);
    }
    case Op::Br: return int(in.imm);
    case Op::BrIf: {
      uint64_t c = pop();
      observe(in, c != 0);
      return c != 0 ? int(in.imm) : kNormal;
    }
    case Op::BrTable: {
      uint64_t i = pop();
      size_t n = in.targets.size() - 1;
      uint32_t t = in.targets[i < n ? i : n];
      observe(in, t);
      return int(t);
    }
    case Op::Return: return kReturn;
    case Op::Call: {
      const FuncDef& fn = ast_.functions[size_t(in.imm)];
      std::vector<uint64_t> args(st_.end() - fn.params.size(), st_.end());
      st_.resize(st_.size() - fn.params.size());
      for (uint64_t v : call(uint32_t(in.imm), args))
        st_.push_back(v);
      return kNormal;
    }
    case Op::CallIndirect: {
      uint64_t i = pop();
      uint32_t f = UINT32_MAX;
      if (i < ast_.table.size() && ast_.table[i] < ast_.functions.size() &&
          ast_.functions[ast_.table[i]].type() == ast_.types[size_t(in.imm)])
        f = ast_.table[i];
      observe(in, f);
      if (f == UINT32_MAX)
        throw TrapSignal{"indirect call to a missing or mistyped function"};
      const FuncDef& fn = ast_.functions[f];
      std::vector<uint64_t> args(st_.end() - fn.params.size(), st_.end());
      st_.resize(st_.size() - fn.params.size());
      for (uint64_t v : call(f, args))
        st_.push_back(v);
      return kNormal;
    }
    case Op::Drop: pop(); return kNormal;
    case Op::Select: {
      uint64_t c = pop();
      uint64_t b = pop();
      uint64_t a = pop();
      observe(in, c != 0);
      st_.push_back(c != 0 ? a : b);
      return kNormal;
    }
    case Op::LocalGet: st_.push_back(locals[size_t(in.imm)]); return kNormal;
    case Op::LocalSet: locals[size_t(in.imm)] = pop(); return kNormal;
    case Op::LocalTee: locals[size_t(in.imm)] = st_.back(); return kNormal;
    case Op::GlobalGet: st_.push_back(globals_[size_t(in.imm)]); return kNormal;
    case Op::GlobalSet: globals_[size_t(in.imm)] = pop(); return kNormal;
    case Op::I32Const: st_.push_back(uint64_t(in.imm) & 0xffffffffu); return kNormal;
    case Op::I64Const: st_.push_back(uint64_t(in.imm)); return kNormal;
    default: break;
    }
    switch (info.cls) {
    case OpClass::Load: {
      uint64_t ea = address(in, info.bytes);
      uint64_t v = 0;
      for (unsigned i = 0; i < info.bytes; ++i)
        v |= uint64_t(mem_[ea + i]) << (8 * i);
      if (info.sign)
        v = uint64_t(signed_of(v, 8 * info.bytes));
      st_.push_back(v & mask_of(w));
      return kNormal;
    }
    case OpClass::Store: {
      uint64_t v = pop();
      uint64_t ea = address(in, info.bytes);
      for (unsigned i = 0; i < info.bytes; ++i)
        mem_[ea + i] = uint8_t(v >> (8 * i));
      return kNormal;
    }
    case OpClass::Binary:
    case OpClass::Compare:
      if (info.arith != Arith::Eqz) {
        uint64_t y = pop();
        uint64_t x = pop();
        st_.push_back(binary(info.arith, x, y, w));
        return kNormal;
      }
      [[fallthrough]];
    case OpClass::Unary:
    case OpClass::Convert: st_.push_back(unary(info.arith, pop(), w)); return kNormal;
    default: break;
    }
    throw TrapSignal{"unsupported instruction " + std::string(info.name)};
  }

  const ModuleAst& ast_;
  std::vector<uint8_t> mem_;
  std::vector<uint64_t> globals_;
  std::vector<uint64_t> st_;
  uint32_t watch_;
  uint64_t limit_;
  uint64_t steps_ = 0;
  int depth_ = 0;
};

} // namespace

ConcreteRun run_concrete(const ModuleAst& ast, uint32_t func, const Valuation& in,
                         uint32_t watch_instr, uint64_t step_limit) {
  ConcreteRun out;
  Interp it(ast, in, watch_instr, step_limit);
  try {
    out.results = it.call(func, in.args);
  } catch (const TrapSignal& t) {
    out.trapped = true;
    out.trap = t.why;
  }
  out.observations = std::move(it.obs);
  return out;
}

Valuation valuation_from_model(const ModuleAst& ast, const Model& model, Side side) {
  Valuation v;
  wat::ResolvedEntry entry = wat::resolve_entry(ast);
  for (size_t i = 0; i < entry.entry.args.size(); ++i) {
    uint64_t m = mask_of(bit_width(entry.func->params[i]));
    if (const auto* c = std::get_if<ConcreteArg>(&entry.entry.args[i])) {
      v.args.push_back(uint64_t(c->value) & m);
      continue;
    }
    const auto& a = std::get<SymbolicArg>(entry.entry.args[i]);
    Side s = a.cls == Secrecy::Public ? Side::Shared : side;
    v.args.push_back(model.value_of(smt_symbol(a.label, s)) & m);
  }
  for (const GlobalDef& g : ast.globals)
    v.globals.push_back(uint64_t(g.init) & mask_of(bit_width(g.type)));

  uint64_t size = ast.memory ? ast.memory->size_bytes() : 0;
  v.memory.assign(size, 0);
  std::string shared_array = array_symbol(0, Side::Shared);
  if (auto it = model.arrays.find(shared_array); it != model.arrays.end()) {
    std::fill(v.memory.begin(), v.memory.end(), it->second.fallback);
    for (const auto& [addr, byte] : it->second.entries)
      if (addr < size)
        v.memory[addr] = byte;
  }
  for (const DataSegment& d : ast.data)
    for (size_t i = 0; i < d.bytes.size(); ++i)
      if (d.offset + i < size)
        v.memory[d.offset + i] = uint8_t(d.bytes[i]);
  for (const PolicyRange& r : ast.policies) {
    if (r.cls != Secrecy::Secret)
      continue;
    for (uint64_t a = r.start; a <= r.end && a < size; ++a)
      v.memory[a] = uint8_t(model.value_of(smt_symbol("h_m0_" + std::to_string(a), side)));
  }
  return v;
}

ReplayResult replay(const ModuleAst& ast, const Model& model, const Verdict& v) {
  ReplayResult out;
  uint32_t func = wat::resolve_entry(ast).func_index;
  ConcreteRun l = run_concrete(ast, func, valuation_from_model(ast, model, Side::L), v.site.instr);
  ConcreteRun r = run_concrete(ast, func, valuation_from_model(ast, model, Side::R), v.site.instr);
  size_t n = std::min(l.observations.size(), r.observations.size());
  for (size_t k = 0; k < n; ++k) {
    if (l.observations[k] != r.observations[k]) {
      out.confirmed = true;
      out.reason = "visit " + std::to_string(k) + ": " + std::to_string(l.observations[k]) +
                   " vs " + std::to_string(r.observations[k]);
      return out;
    }
  }
  if (n == 0 && (l.trapped || r.trapped))
    out.reason = std::string(l.trapped ? "left" : "right") + " run trapped before the site: " +
                 (l.trapped ? l.trap : r.trap);
  else
    out.reason = "no divergence in " + std::to_string(n) + " common visits";
  return out;
}

// ---------------------------------------------------------------------------
// Aggregation

size_t AnalysisReport::violations() const {
  size_t n = 0;
  for (const Verdict& v : verdicts)
    n += v.kind == VerdictKind::Violation;
  return n;
}

AnalysisReport make_report(const ModuleAst& ast, AnalysisResult result) {
  AnalysisReport rep;
  rep.counters = result.counters;
  rep.complete = result.complete;
  rep.reason = result.reason;
  rep.invariants = std::move(result.invariants);

  using Key = std::tuple<uint32_t, int, int>;
  std::map<Key, size_t> index;
  std::vector<std::vector<const Verdict*>> groups;
  for (const Verdict& v : result.verdicts) {
    int check = v.kind == VerdictKind::Trap ? -1 : int(v.check);
    Key k{v.site.instr, check, int(v.kind)};
    auto [it, fresh] = index.emplace(k, groups.size());
    if (fresh) {
      groups.emplace_back();
      rep.verdicts.push_back(v);
    } else {
      ++rep.verdicts[it->second].occurrences;
    }
    groups[it->second].push_back(&v);
  }
  // A site is confirmed by any of its counterexamples; the first few are tried.
  for (size_t i = 0; i < rep.verdicts.size(); ++i) {
    Verdict& v = rep.verdicts[i];
    if (v.kind != VerdictKind::Violation)
      continue;
    ReplayResult best;
    size_t tries = 0;
    for (const Verdict* cand : groups[i]) {
      if (++tries > 16)
        break;
      ReplayResult r = replay(ast, *cand->model, *cand);
      if (tries == 1)
        best = r;
      if (r.confirmed) {
        uint32_t occ = v.occurrences;
        v = *cand;
        v.occurrences = occ;
        best = r;
        break;
      }
    }
    best.verdict = i;
    rep.replays.push_back(best);
  }
  return rep;
}

int exit_code(const AnalysisReport& r) {
  if (r.violations() > 0)
    return 1;
  return r.complete ? 0 : 2;
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

std::string model_excerpt(const Model& m) {
  std::string out;
  size_t shown = 0;
  for (const auto& [name, value] : m.values) {
    if (shown++ == 8) {
      out += " ...";
      break;
    }
    out += (out.empty() ? "" : " ") + name + "=" + std::to_string(value);
  }
  return out.empty() ? "(no symbols)" : out;
}

const ReplayResult* replay_of(const AnalysisReport& r, size_t i) {
  for (const ReplayResult& x : r.replays)
    if (x.verdict == i)
      return &x;
  return nullptr;
}

} // namespace

std::string render_text(const AnalysisReport& r, bool stats) {
  std::ostringstream os;
  size_t nv = r.violations();
  if (nv == 0 && r.complete)
    os << "Verify CT ✓  no violations\n";
  else if (nv == 0)
    os << "Verify CT ?  incomplete (" << r.reason << ")\n";
  else
    os << "Verify CT ✗  " << nv << " violation site" << (nv == 1 ? "" : "s")
       << (r.complete ? "" : ", incomplete (" + r.reason + ")") << "\n";
  for (size_t i = 0; i < r.verdicts.size(); ++i) {
    const Verdict& v = r.verdicts[i];
    if (v.kind == VerdictKind::Safe)
      continue;
    os << "  " << verdict_kind_name(v.kind);
    if (v.kind != VerdictKind::Trap)
      os << " " << check_kind_name(v.check);
    os << " at " << v.site.loc.str() << " " << v.site.op << " in " << v.site.func;
    if (v.occurrences > 1)
      os << " (x" << v.occurrences << ")";
    os << "\n";
    if (v.model)
      os << "    model: " << model_excerpt(*v.model) << "\n";
    if (const ReplayResult* rr = replay_of(r, i))
      os << "    replay: " << (rr->confirmed ? "confirmed" : "refuted") << ", " << rr->reason
         << "\n";
    if (v.kind != VerdictKind::Violation && !v.detail.empty())
      os << "    " << v.detail << "\n";
  }
  for (const LoopInvariant& inv : r.invariants) {
    os << "  loop at " << inv.loc.str() << " in " << inv.func << ": I = " << inv.formula();
    if (!inv.assert_ok)
      os << " (assert failed on " << inv.failure << ")";
    os << "\n";
  }
  const Counters& c = r.counters;
  os << "#FS " << c.formulas_simplified << "  #SS " << c.solver_queries << "  paths "
     << c.paths_explored << "\n";
  if (stats) {
    os << "loc visited   " << c.loc_visited << "\n";
    os << "wall time     " << c.wall_time << " s\n";
    os << "completion    " << (r.complete ? "complete" : "incomplete: " + r.reason) << "\n";
  }
  return os.str();
}

namespace {

Json site_json(const Site& s) {
  return Json{{"func", s.func}, {"instr", s.instr}, {"op", s.op},
              {"line", s.loc.line}, {"column", s.loc.column}};
}

Json model_json(const Model& m) {
  Json values = Json::object();
  for (const auto& [k, v] : m.values)
    values[k] = v;
  Json arrays = Json::object();
  for (const auto& [k, a] : m.arrays) {
    Json entries = Json::object();
    for (const auto& [addr, byte] : a.entries)
      entries[std::to_string(addr)] = byte;
    arrays[k] = Json{{"default", a.fallback}, {"entries", entries}};
  }
  return Json{{"values", values}, {"arrays", arrays}};
}

Json slots_json(const std::vector<Slot>& xs) {
  Json out = Json::array();
  for (const Slot& x : xs)
    out.push_back(x.name());
  return out;
}

[[noreturn]] void bad(const std::string& what) { throw Error("ReportFormat", what); }

template <typename T> T pick(const char* const* names, size_t n, const std::string& s) {
  for (size_t i = 0; i < n; ++i)
    if (s == names[i])
      return T(i);
  bad("unknown enumerator " + s);
}

Slot slot_of(const std::string& s) {
  auto x = Slot::parse(s);
  if (!x)
    bad("bad slot " + s);
  return *x;
}

} // namespace

std::string render_json(const AnalysisReport& r) {
  Json verdicts = Json::array();
  for (size_t i = 0; i < r.verdicts.size(); ++i) {
    const Verdict& v = r.verdicts[i];
    Json j{{"kind", verdict_kind_name(v.kind)},
           {"check", check_kind_name(v.check)},
           {"site", site_json(v.site)},
           {"visit", v.visit},
           {"occurrences", v.occurrences},
           {"summarized", v.summarized},
           {"detail", v.detail}};
    if (v.model)
      j["model"] = model_json(*v.model);
    if (const ReplayResult* rr = replay_of(r, i))
      j["replay"] = Json{{"confirmed", rr->confirmed}, {"reason", rr->reason}};
    verdicts.push_back(j);
  }
  Json invs = Json::array();
  for (const LoopInvariant& inv : r.invariants) {
    Json consts = Json::object();
    for (const auto& [x, c] : inv.const_bindings)
      consts[x.name()] = c;
    invs.push_back(Json{{"func", inv.func},
                        {"instr", inv.instr},
                        {"line", inv.loc.line},
                        {"column", inv.loc.column},
                        {"modified", slots_json(inv.modified)},
                        {"public", slots_json(inv.public_subset)},
                        {"const", consts},
                        {"formula", inv.formula()},
                        {"policy_layout", inv.policy_layout},
                        {"assert_ok", inv.assert_ok},
                        {"failure", inv.failure}});
  }
  const Counters& c = r.counters;
  Json out{{"schema", "relct-report/1"},
           {"verified", r.complete && r.violations() == 0},
           {"completion", Json{{"complete", r.complete}, {"reason", r.reason}}},
           {"counters", Json{{"formulas_simplified", c.formulas_simplified},
                             {"solver_queries", c.solver_queries},
                             {"paths_explored", c.paths_explored},
                             {"loc_visited", c.loc_visited},
                             {"wall_time", c.wall_time}}},
           {"violations", r.violations()},
           {"verdicts", verdicts},
           {"invariants", invs}};
  return out.dump(2) + "\n";
}

AnalysisReport report_from_json(const std::string& text) {
  static const char* const kinds[] = {"Safe", "Violation", "Unknown", "Trap", "PathInfeasible"};
  static const char* const checks[] = {"MemoryIndex", "Branch", "BrTable", "CallIndirect",
                                       "Select"};
  AnalysisReport r;
  try {
    Json j = Json::parse(text);
    if (j.at("schema") != "relct-report/1")
      bad("unsupported schema");
    r.complete = j.at("completion").at("complete");
    r.reason = j.at("completion").at("reason");
    const Json& c = j.at("counters");
    r.counters.formulas_simplified = c.at("formulas_simplified");
    r.counters.solver_queries = c.at("solver_queries");
    r.counters.paths_explored = c.at("paths_explored");
    r.counters.loc_visited = c.at("loc_visited");
    r.counters.wall_time = c.at("wall_time");
    for (const Json& jv : j.at("verdicts")) {
      Verdict v;
      v.kind = pick<VerdictKind>(kinds, 5, jv.at("kind"));
      v.check = pick<CheckKind>(checks, 5, jv.at("check"));
      const Json& s = jv.at("site");
      v.site.func = s.at("func");
      v.site.instr = s.at("instr");
      v.site.op = s.at("op");
      v.site.loc.line = s.at("line");
      v.site.loc.column = s.at("column");
      v.visit = jv.at("visit");
      v.occurrences = jv.at("occurrences");
      v.summarized = jv.at("summarized");
      v.detail = jv.at("detail");
      if (jv.contains("model")) {
        Model m;
        for (const auto& [k, val] : jv["model"].at("values").items())
          m.values[k] = val.get<uint64_t>();
        for (const auto& [k, a] : jv["model"].at("arrays").items()) {
          ArrayValue av;
          av.fallback = a.at("default");
          for (const auto& [addr, byte] : a.at("entries").items())
            av.entries[uint32_t(std::stoul(addr))] = byte.get<uint8_t>();
          m.arrays[k] = av;
        }
        v.model = m;
      }
      if (jv.contains("replay"))
        r.replays.push_back(
            {r.verdicts.size(), jv["replay"].at("confirmed"), jv["replay"].at("reason")});
      r.verdicts.push_back(std::move(v));
    }
    for (const Json& ji : j.at("invariants")) {
      LoopInvariant inv;
      inv.func = ji.at("func");
      inv.instr = ji.at("instr");
      inv.loc.line = ji.at("line");
      inv.loc.column = ji.at("column");
      for (const Json& x : ji.at("modified"))
        inv.modified.push_back(slot_of(x));
      for (const Json& x : ji.at("public"))
        inv.public_subset.push_back(slot_of(x));
      for (const auto& [k, val] : ji.at("const").items())
        inv.const_bindings[slot_of(k)] = val.get<uint64_t>();
      inv.policy_layout = ji.at("policy_layout");
      inv.assert_ok = ji.at("assert_ok");
      inv.failure = ji.at("failure");
      r.invariants.push_back(std::move(inv));
    }
  } catch (const nlohmann::json::exception& e) {
    bad(e.what());
  } catch (const std::invalid_argument& e) {
    bad(e.what());
  } catch (const std::out_of_range& e) {
    bad(e.what());
  }
  return r;
}

} // namespace relct

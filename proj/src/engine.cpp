#include "relct/engine.hpp"

#include <algorithm>
#include <set>

#include "relct/invariants.hpp"

namespace relct {

const char* verdict_kind_name(VerdictKind k) {
  switch (k) {
  case VerdictKind::Safe: return "Safe";
  case VerdictKind::Violation: return "Violation";
  case VerdictKind::Unknown: return "Unknown";
  case VerdictKind::Trap: return "Trap";
  case VerdictKind::PathInfeasible: return "PathInfeasible";
  }
  return "?";
}

const char* check_kind_name(CheckKind k) {
  switch (k) {
  case CheckKind::MemoryIndex: return "MemoryIndex";
  case CheckKind::Branch: return "Branch";
  case CheckKind::BrTable: return "BrTable";
  case CheckKind::CallIndirect: return "CallIndirect";
  case CheckKind::Select: return "Select";
  }
  return "?";
}

std::string Slot::name() const {
  switch (kind) {
  case Kind::Local: return "lv" + std::to_string(index);
  case Kind::Global: return "gv" + std::to_string(index);
  case Kind::Byte: return "mem[" + std::to_string(index) + "]";
  case Kind::WholeMemory: return "mem[*]";
  }
  return "?";
}

std::optional<Slot> Slot::parse(const std::string& text) {
  auto number = [](const std::string& digits) -> std::optional<uint32_t> {
    if (digits.empty() || digits.size() > 10 ||
        digits.find_first_not_of("0123456789") != std::string::npos)
      return std::nullopt;
    uint64_t v = std::stoull(digits);
    if (v > UINT32_MAX)
      return std::nullopt;
    return uint32_t(v);
  };
  if (text == "mem[*]")
    return Slot{Kind::WholeMemory, 0};
  if (text.size() > 5 && text.compare(0, 4, "mem[") == 0 && text.back() == ']') {
    if (auto n = number(text.substr(4, text.size() - 5)))
      return Slot{Kind::Byte, *n};
    return std::nullopt;
  }
  if (text.size() > 2 && (text.compare(0, 2, "lv") == 0 || text.compare(0, 2, "gv") == 0)) {
    if (auto n = number(text.substr(2)))
      return Slot{text[0] == 'l' ? Kind::Local : Kind::Global, *n};
  }
  return std::nullopt;
}

std::string LoopInvariant::formula() const {
  std::string out = "{";
  bool first = true;
  for (const Slot& x : public_subset) {
    if (!first)
      out += ", ";
    first = false;
    std::string n = x.name();
    out += n + "_l = " + n + "_r";
  }
  for (const auto& [x, c] : const_bindings) {
    if (!first)
      out += ", ";
    first = false;
    out += x.name() + " = " + std::to_string(c);
  }
  return out + "}";
}

namespace {

Kind arith_kind(Arith a) {
  switch (a) {
  case Arith::Add: return Kind::Add;
  case Arith::Sub: return Kind::Sub;
  case Arith::Mul: return Kind::Mul;
  case Arith::DivS: return Kind::DivS;
  case Arith::DivU: return Kind::DivU;
  case Arith::RemS: return Kind::RemS;
  case Arith::RemU: return Kind::RemU;
  case Arith::And: return Kind::And;
  case Arith::Or: return Kind::Or;
  case Arith::Xor: return Kind::Xor;
  case Arith::Shl: return Kind::Shl;
  case Arith::ShrS: return Kind::ShrS;
  case Arith::ShrU: return Kind::ShrU;
  case Arith::Rotl: return Kind::Rotl;
  case Arith::Rotr: return Kind::Rotr;
  case Arith::Eq: return Kind::Eq;
  case Arith::Ne: return Kind::Ne;
  case Arith::LtS: return Kind::LtS;
  case Arith::LtU: return Kind::LtU;
  case Arith::GtS: return Kind::GtS;
  case Arith::GtU: return Kind::GtU;
  case Arith::LeS: return Kind::LeS;
  case Arith::LeU: return Kind::LeU;
  case Arith::GeS: return Kind::GeS;
  case Arith::GeU: return Kind::GeU;
  case Arith::Clz: return Kind::Clz;
  case Arith::Ctz: return Kind::Ctz;
  case Arith::Popcnt: return Kind::Popcnt;
  default: return Kind::Const;
  }
}

RelExpr pop(SymState& s) {
  RelExpr v = s.stack.back();
  s.stack.pop_back();
  return v;
}

bool label_alive(const SymState& s, uint64_t instance) {
  for (const Frame& f : s.frames)
    for (const Label& l : f.labels)
      if (l.instance == instance)
        return true;
  return false;
}

} // namespace

Engine::Engine(const ModuleAst& ast, const EngineConfig& cfg, Solver& solver)
    : ast_(ast), cfg_(cfg), solver_(solver) {
  uint32_t max_id = 0;
  for (const FuncDef& f : ast_.functions)
    for_each_instr(f.body, [&](const Instr& in) { max_id = std::max(max_id, in.id); });
  seen_.assign(max_id + 1, false);
  solver_.config().threshold = cfg_.portfolio_threshold;
  start_ = std::chrono::steady_clock::now();
}

bool Engine::out_of_time() const {
  double el = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  return el > cfg_.time_budget;
}

std::string Engine::fresh_name(const std::string& prefix) {
  return prefix + std::to_string(++names_);
}

void Engine::mark_incomplete(const std::string& reason) {
  if (result_.complete) {
    result_.complete = false;
    result_.reason = reason;
  }
}

void Engine::record(Verdict v) { result_.verdicts.push_back(std::move(v)); }

const Node* Engine::simp(const Node* e) {
  return simplify(ctx_, e, cfg_.use_cache ? &cache_ : nullptr);
}

RelExpr Engine::simp(const RelExpr& e) {
  return simplify(ctx_, e, cfg_.use_cache ? &cache_ : nullptr);
}

void Engine::add_pc(SymState& s, const RelExpr& cond) {
  RelExpr c = simp(cond);
  if (c.is_const() && c.l->value == 1)
    return;
  s.pc.push_back(c);
}

SolverAnswer Engine::decide(QueryKind kind, const SymState& s, std::vector<const Node*> goal) {
  ++result_.counters.formulas_simplified;
  SolverAnswer ans;
  ans.responder = "simplifier";
  std::vector<const Node*> kept;
  for (const Node* g : goal) {
    g = simp(g);
    if (g->is_const(0)) {
      ans.status = SolverStatus::Unsat;
      return ans;
    }
    if (!g->is_const(1))
      kept.push_back(g);
  }
  // Explored paths carry satisfiable path conditions.
  if (kept.empty() && kind == QueryKind::Feasibility) {
    ans.status = SolverStatus::Sat;
    return ans;
  }
  std::vector<const Node*> assertions;
  for (const RelExpr& c : s.pc) {
    assertions.push_back(c.l);
    if (!c.is_shared())
      assertions.push_back(c.r);
  }
  assertions.insert(assertions.end(), kept.begin(), kept.end());
  ++result_.counters.solver_queries;
  return solver_.dispatch(make_query(kind, std::move(assertions)));
}

bool Engine::provably_public(const SymState& s, const RelExpr& v) {
  if (v.is_shared())
    return true;
  SolverAnswer a = decide(QueryKind::PolicyProbe, s, {ctx_.bin(Kind::Ne, v.l, v.r)});
  return a.status == SolverStatus::Unsat;
}

Site Engine::site_of(const SymState& s, const Instr& in) const {
  Site site;
  site.func = ast_.functions[s.frames.back().func].name;
  site.instr = in.id;
  site.op = std::string(op_info(in.op).name);
  site.loc = in.loc;
  return site;
}

SymState Engine::init_state(const wat::ResolvedEntry& entry) {
  SymState s;
  s.mem = SymMemory(MemBase::from_module(ctx_, 0, ast_));
  for (const GlobalDef& g : ast_.globals)
    s.globals.push_back(RelExpr::shared(ctx_.constant(uint64_t(g.init), bit_width(g.type))));
  const FuncDef& fn = *entry.func;
  Frame f;
  f.func = entry.func_index;
  std::set<std::string> labels;
  for (size_t i = 0; i < entry.entry.args.size(); ++i) {
    unsigned w = bit_width(fn.params[i]);
    if (const auto* c = std::get_if<ConcreteArg>(&entry.entry.args[i])) {
      f.locals.push_back(RelExpr::shared(ctx_.constant(uint64_t(c->value), w)));
      continue;
    }
    const auto& a = std::get<SymbolicArg>(entry.entry.args[i]);
    if (!labels.insert(a.label).second)
      throw PolicyError(entry.entry.loc, "entry label " + a.label + " bound twice");
    if (a.cls == Secrecy::Public)
      f.locals.push_back(RelExpr::shared(ctx_.sym(a.label, Side::Shared, w)));
    else
      f.locals.push_back(
          RelExpr::pair(ctx_.sym(a.label, Side::L, w), ctx_.sym(a.label, Side::R, w)));
  }
  for (ValType t : fn.locals)
    f.locals.push_back(RelExpr::shared(ctx_.constant(0, bit_width(t))));
  Label body;
  body.body = &fn.body;
  body.end_arity = body.br_arity = uint8_t(fn.results.size());
  f.labels.push_back(body);
  s.frames.push_back(std::move(f));
  return s;
}

AnalysisResult Engine::explore() {
  start_ = std::chrono::steady_clock::now();
  wat::ResolvedEntry entry = wat::resolve_entry(ast_);
  std::vector<SymState> work;
  work.push_back(init_state(entry));
  run(std::move(work), 0);
  uint64_t seen = 0;
  for (bool b : seen_)
    seen += b;
  result_.counters.loc_visited = seen;
  result_.counters.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  return std::move(result_);
}

std::vector<LoopInvariant>& Engine::invariants() { return result_.invariants; }

Engine::RunOutcome Engine::run(std::vector<SymState> work, uint64_t watch) {
  RunOutcome out;
  std::vector<SymState> forks;
  // False once the state has been ended or handed to `out`.
  auto keep = [&](SymState& s) {
    if (s.dead || s.finished)
      return false;
    if (watch) {
      if (s.back_edge == watch) {
        out.iteration_ends.push_back(std::move(s));
        return false;
      }
      if (!label_alive(s, watch)) {
        out.exits.push_back(std::move(s));
        return false;
      }
    }
    return true;
  };
  while (!work.empty() && !stop_) {
    SymState s = std::move(work.back());
    work.pop_back();
    while (true) {
      if (cfg_.path_limit && result_.counters.paths_explored >= cfg_.path_limit) {
        mark_incomplete("path_limit");
        stop_ = true;
      } else if (out_of_time()) {
        mark_incomplete("time_budget");
        stop_ = true;
      }
      if (stop_)
        break;
      forks.clear();
      step(s, forks);
      for (SymState& f : forks)
        if (keep(f))
          work.push_back(std::move(f));
      if (!keep(s))
        break;
    }
  }
  return out;
}

void Engine::end_path(SymState& s) {
  if (s.checks)
    ++result_.counters.paths_explored;
}

void Engine::step(SymState& s, std::vector<SymState>& forks) {
  s.back_edge = 0;
  Label& lb = s.frames.back().labels.back();
  if (lb.pos >= lb.body->size()) {
    end_label(s);
    return;
  }
  const Instr& in = (*lb.body)[lb.pos++];
  seen_[in.id] = true;
  exec(s, in, forks);
}

void Engine::end_label(SymState& s) {
  Frame& f = s.frames.back();
  if (f.labels.size() == 1) {
    do_return(s);
    return;
  }
  Label lb = f.labels.back();
  std::vector<RelExpr> vals(s.stack.end() - lb.end_arity, s.stack.end());
  s.stack.resize(lb.height);
  s.stack.insert(s.stack.end(), vals.begin(), vals.end());
  f.labels.pop_back();
}

void Engine::branch(SymState& s, uint32_t depth) {
  Frame& f = s.frames.back();
  size_t ti = f.labels.size() - 1 - depth;
  if (ti == 0) {
    do_return(s);
    return;
  }
  Label& t = f.labels[ti];
  if (t.is_loop) {
    s.stack.resize(t.height);
    f.labels.resize(ti + 1);
    Label& lp = f.labels[ti];
    lp.pos = 0;
    if (++lp.iter >= cfg_.unroll_limit) {
      mark_incomplete("unroll_limit");
      end_path(s);
      s.dead = true;
      return;
    }
    s.back_edge = lp.instance;
    return;
  }
  std::vector<RelExpr> vals(s.stack.end() - t.br_arity, s.stack.end());
  s.stack.resize(t.height);
  s.stack.insert(s.stack.end(), vals.begin(), vals.end());
  f.labels.resize(ti);
}

void Engine::do_return(SymState& s) {
  Frame& f = s.frames.back();
  size_t n = ast_.functions[f.func].results.size();
  std::vector<RelExpr> vals(s.stack.end() - n, s.stack.end());
  s.stack.resize(f.stack_base);
  s.frames.pop_back();
  if (s.frames.empty()) {
    s.results = std::move(vals);
    s.finished = true;
    end_path(s);
    return;
  }
  s.stack.insert(s.stack.end(), vals.begin(), vals.end());
}

void Engine::call(SymState& s, uint32_t func) {
  const FuncDef& fn = ast_.functions[func];
  size_t depth = 0;
  for (const Frame& f : s.frames)
    depth += f.func == func;
  if (depth >= cfg_.unroll_limit) {
    mark_incomplete("unroll_limit");
    end_path(s);
    s.dead = true;
    return;
  }
  Frame nf;
  nf.func = func;
  nf.locals.assign(s.stack.end() - fn.params.size(), s.stack.end());
  s.stack.resize(s.stack.size() - fn.params.size());
  for (ValType t : fn.locals)
    nf.locals.push_back(RelExpr::shared(ctx_.constant(0, bit_width(t))));
  nf.stack_base = uint32_t(s.stack.size());
  Label body;
  body.body = &fn.body;
  body.height = nf.stack_base;
  body.end_arity = body.br_arity = uint8_t(fn.results.size());
  nf.labels.push_back(body);
  s.frames.push_back(std::move(nf));
}

void Engine::trap(SymState& s, const Instr& in, const std::string& why) {
  if (s.checks) {
    Verdict v;
    v.kind = VerdictKind::Trap;
    v.site = site_of(s, in);
    v.summarized = s.summarized;
    v.detail = why;
    record(std::move(v));
  }
  end_path(s);
  s.dead = true;
}

Verdict Engine::check(CheckKind kind, SymState& s, const Instr& in, const RelExpr& value,
                      uint32_t visit) {
  Verdict v;
  v.check = kind;
  v.site = site_of(s, in);
  v.visit = visit;
  v.summarized = s.summarized;
  if (!s.checks || value.is_shared() || (cfg_.target && in.id != *cfg_.target))
    return v;
  std::vector<const Node*> goal;
  QueryKind qk = QueryKind::BranchDivergence;
  if (kind == CheckKind::Branch || kind == CheckKind::Select) {
    unsigned w = value.width();
    goal.push_back(ctx_.bin(Kind::Eq, value.r, ctx_.constant(0, w)));
    goal.push_back(ctx_.bin(Kind::Ne, value.l, ctx_.constant(0, w)));
  } else {
    if (kind == CheckKind::MemoryIndex)
      qk = QueryKind::MemIndexDivergence;
    goal.push_back(ctx_.bin(Kind::Ne, value.l, value.r));
  }
  SolverAnswer a = decide(qk, s, std::move(goal));
  switch (a.status) {
  case SolverStatus::Unsat: return v;
  case SolverStatus::Sat:
    v.kind = VerdictKind::Violation;
    v.model = a.model ? std::move(a.model) : Model{};
    v.detail = a.responder;
    if (cfg_.target)
      stop_ = true;
    break;
  default:
    v.kind = VerdictKind::Unknown;
    v.detail = std::string(status_name(a.status)) + " from " + a.responder +
               (a.detail.empty() ? "" : ": " + a.detail);
    mark_incomplete("solver_unknown");
    break;
  }
  record(v);
  return v;
}

bool Engine::feasible(const SymState& s, const std::vector<RelExpr>& extra) {
  std::vector<const Node*> goal;
  for (const RelExpr& e : extra) {
    goal.push_back(e.l);
    if (!e.is_shared())
      goal.push_back(e.r);
  }
  if (cfg_.feasibility == FeasibilityPolicy::Never) {
    for (const Node* g : goal)
      if (simp(g)->is_const(0))
        return false;
    return true;
  }
  // Unknown keeps the path: over-approximating is sound.
  return decide(QueryKind::Feasibility, s, std::move(goal)).status != SolverStatus::Unsat;
}

std::vector<SymState> Engine::split(SymState& s, const RelExpr& cond) {
  // Returns {taken, not taken}; an infeasible side comes back dead.
  std::vector<SymState> out(2);
  unsigned w = cond.width();
  const Node* zero = ctx_.constant(0, w);
  if (cond.is_const()) {
    bool t = cond.l->value != 0;
    out[t ? 0 : 1] = s;
    out[t ? 1 : 0].dead = true;
    return out;
  }
  RelExpr taken{ctx_.bin(Kind::Ne, cond.l, zero), ctx_.bin(Kind::Ne, cond.r, zero)};
  RelExpr not_taken{ctx_.bin(Kind::Eq, cond.l, zero), ctx_.bin(Kind::Eq, cond.r, zero)};
  if (cond.is_shared())
    taken.r = taken.l, not_taken.r = not_taken.l;
  bool ft = feasible(s, {taken});
  bool fn = feasible(s, {not_taken});
  if (ft) {
    out[0] = s;
    add_pc(out[0], taken);
  } else {
    out[0].dead = true;
  }
  if (fn) {
    out[1] = s;
    add_pc(out[1], not_taken);
  } else {
    out[1].dead = true;
  }
  return out;
}

void Engine::access(SymState& s, const Instr& in, RelExpr& ea, uint32_t visit) {
  const OpInfo& info = op_info(in.op);
  RelExpr idx = pop(s);
  RelExpr off = RelExpr::shared(ctx_.constant(in.offset, 32));
  ea = mk_binop(ctx_, Kind::Add, idx, off, false);
  // A flagged access continues as if both executions used one address.
  if (check(CheckKind::MemoryIndex, s, in, ea, visit).kind == VerdictKind::Violation)
    add_pc(s, RelExpr::shared(ctx_.bin(Kind::Eq, ea.l, ea.r)));
  uint64_t size = s.mem.size();
  uint64_t need = uint64_t(in.offset) + info.bytes;
  if (idx.is_const()) {
    if (idx.l->value + need > size)
      trap(s, in, "out-of-bounds memory access");
    return;
  }
  if (need > size) {
    trap(s, in, "out-of-bounds memory access");
    return;
  }
  // Paths that continue past the access did not trap.
  const Node* lim = ctx_.constant(std::min<uint64_t>(size - need, UINT32_MAX), 32);
  RelExpr in_bounds{ctx_.bin(Kind::LeU, idx.l, lim), ctx_.bin(Kind::LeU, idx.r, lim)};
  if (idx.is_shared())
    in_bounds.r = in_bounds.l;
  RelExpr c = simp(in_bounds);
  if (c.l->is_const(0) || c.r->is_const(0)) {
    trap(s, in, "out-of-bounds memory access");
    return;
  }
  add_pc(s, c);
}

void Engine::enter_loop(SymState& s, const Instr& in, std::vector<SymState>& forks) {
  Label lb;
  lb.body = &in.body;
  lb.instr = &in;
  lb.height = uint32_t(s.stack.size());
  lb.end_arity = in.result ? 1 : 0;
  lb.br_arity = 0;
  lb.is_loop = true;
  lb.instance = fresh_instance();
  s.frames.back().labels.push_back(lb);
  if (!cfg_.invariants)
    return;
  std::vector<SymState> exits = analyze_loop(*this, s, in);
  s.dead = true;
  for (SymState& e : exits)
    forks.push_back(std::move(e));
}

void Engine::exec(SymState& s, const Instr& in, std::vector<SymState>& forks) {
  const OpInfo& info = op_info(in.op);
  Frame& f = s.frames.back();
  switch (in.op) {
  case Op::Unreachable: trap(s, in, "unreachable executed"); return;
  case Op::Nop: return;
  case Op::Block: {
    Label lb;
    lb.body = &in.body;
    lb.instr = &in;
    lb.height = uint32_t(s.stack.size());
    lb.end_arity = lb.br_arity = in.result ? 1 : 0;
    f.labels.push_back(lb);
    return;
  }
  case Op::Loop: enter_loop(s, in, forks); return;
  case Op::If: {
    RelExpr c = pop(s);
    uint32_t visit = s.visits[in.id]++;
    check(CheckKind::Branch, s, in, c, visit);
    std::vector<SymState> succ = split(s, c);
    for (int side = 0; side < 2; ++side) {
      SymState& t = succ[side];
      if (t.dead)
        continue;
      const std::vector<Instr>& body = side == 0 ? in.body : in.else_body;
      Label lb;
      lb.body = &body;
      lb.instr = &in;
      lb.height = uint32_t(t.stack.size());
      lb.end_arity = lb.br_arity = in.result ? 1 : 0;
      t.frames.back().labels.push_back(lb);
    }
    if (succ[1].dead)
      s = std::move(succ[0]);
    else {
      if (!succ[0].dead)
        forks.push_back(std::move(succ[0]));
      s = std::move(succ[1]);
    }
    return;
  }
  case Op::Br: branch(s, uint32_t(in.imm)); return;
  case Op::BrIf: {
    RelExpr c = pop(s);
    uint32_t visit = s.visits[in.id]++;
    check(CheckKind::Branch, s, in, c, visit);
    std::vector<SymState> succ = split(s, c);
    if (!succ[0].dead)
      branch(succ[0], uint32_t(in.imm));
    if (succ[1].dead)
      s = std::move(succ[0]);
    else {
      if (!succ[0].dead)
        forks.push_back(std::move(succ[0]));
      s = std::move(succ[1]);
    }
    return;
  }
  case Op::BrTable: {
    RelExpr i = pop(s);
    uint32_t visit = s.visits[in.id]++;
    size_t n = in.targets.size() - 1;
    if (i.is_const()) {
      uint64_t k = std::min<uint64_t>(i.l->value, n);
      branch(s, in.targets[k]);
      return;
    }
    std::vector<uint32_t> distinct(in.targets.begin(), in.targets.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() == 1) {
      branch(s, distinct[0]);
      return;
    }
    auto target_of = [&](const Node* x) {
      const Node* acc = ctx_.constant(in.targets[n], 32);
      for (size_t k = n; k-- > 0;)
        acc = ctx_.ite(ctx_.bin(Kind::Eq, x, ctx_.constant(k, 32)),
                       ctx_.constant(in.targets[k], 32), acc);
      return acc;
    };
    RelExpr t{target_of(i.l), i.is_shared() ? nullptr : target_of(i.r)};
    if (i.is_shared())
      t.r = t.l;
    check(CheckKind::BrTable, s, in, t, visit);
    auto cond_of = [&](const Node* x, uint32_t d) {
      const Node* acc = ctx_.boolean(false);
      for (size_t k = 0; k < n; ++k)
        if (in.targets[k] == d)
          acc = ctx_.bool_or(acc, ctx_.bin(Kind::Eq, x, ctx_.constant(k, 32)));
      if (in.targets[n] == d)
        acc = ctx_.bool_or(acc, ctx_.bin(Kind::GeU, x, ctx_.constant(n, 32)));
      return acc;
    };
    std::vector<SymState> succ;
    for (uint32_t d : distinct) {
      RelExpr c{cond_of(i.l, d), cond_of(i.r, d)};
      if (i.is_shared())
        c.r = c.l;
      if (!feasible(s, {c}))
        continue;
      SymState t2 = s;
      add_pc(t2, c);
      branch(t2, d);
      succ.push_back(std::move(t2));
    }
    if (succ.empty()) {
      s.dead = true;
      return;
    }
    for (size_t k = 1; k < succ.size(); ++k)
      forks.push_back(std::move(succ[k]));
    s = std::move(succ[0]);
    return;
  }
  case Op::Return: do_return(s); return;
  case Op::Call: call(s, uint32_t(in.imm)); return;
  case Op::CallIndirect: {
    RelExpr i = pop(s);
    uint32_t visit = s.visits[in.id]++;
    const FuncType& want = ast_.types[size_t(in.imm)];
    const std::vector<uint32_t>& table = ast_.table;
    // Resolved callee per table slot; UINT32_MAX traps.
    auto callee = [&](uint64_t k) -> uint32_t {
      if (k >= table.size() || table[k] >= ast_.functions.size())
        return UINT32_MAX;
      return ast_.functions[table[k]].type() == want ? table[k] : UINT32_MAX;
    };
    if (i.is_const()) {
      uint32_t fn = callee(i.l->value);
      if (fn == UINT32_MAX)
        trap(s, in, "indirect call to a missing or mistyped function");
      else
        call(s, fn);
      return;
    }
    std::vector<uint32_t> distinct;
    for (size_t k = 0; k < table.size(); ++k)
      distinct.push_back(callee(k));
    distinct.push_back(UINT32_MAX);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    auto target_of = [&](const Node* x) {
      const Node* acc = ctx_.constant(UINT32_MAX, 32);
      for (size_t k = table.size(); k-- > 0;)
        acc = ctx_.ite(ctx_.bin(Kind::Eq, x, ctx_.constant(k, 32)),
                       ctx_.constant(callee(k), 32), acc);
      return acc;
    };
    RelExpr t{target_of(i.l), target_of(i.r)};
    check(CheckKind::CallIndirect, s, in, t, visit);
    auto cond_of = [&](const Node* x, uint32_t fn) {
      const Node* acc = ctx_.boolean(false);
      for (size_t k = 0; k < table.size(); ++k)
        if (callee(k) == fn)
          acc = ctx_.bool_or(acc, ctx_.bin(Kind::Eq, x, ctx_.constant(k, 32)));
      if (fn == UINT32_MAX)
        acc = ctx_.bool_or(acc, ctx_.bin(Kind::GeU, x, ctx_.constant(table.size(), 32)));
      return acc;
    };
    std::vector<SymState> succ;
    for (uint32_t fn : distinct) {
      RelExpr c{cond_of(i.l, fn), cond_of(i.r, fn)};
      if (i.is_shared())
        c.r = c.l;
      if (!feasible(s, {c}))
        continue;
      SymState t2 = s;
      add_pc(t2, c);
      if (fn == UINT32_MAX) {
        trap(t2, in, "indirect call to a missing or mistyped function");
        continue;
      }
      call(t2, fn);
      succ.push_back(std::move(t2));
    }
    if (succ.empty()) {
      s.dead = true;
      return;
    }
    for (size_t k = 1; k < succ.size(); ++k)
      forks.push_back(std::move(succ[k]));
    s = std::move(succ[0]);
    return;
  }
  case Op::Drop: s.stack.pop_back(); return;
  case Op::Select: {
    RelExpr c = pop(s);
    RelExpr b = pop(s);
    RelExpr a = pop(s);
    uint32_t visit = s.visits[in.id]++;
    const Node* zero = ctx_.constant(0, 32);
    RelExpr cond{ctx_.bin(Kind::Ne, c.l, zero), ctx_.bin(Kind::Ne, c.r, zero)};
    if (cfg_.select_unsafe &&
        check(CheckKind::Select, s, in, c, visit).kind == VerdictKind::Violation)
      add_pc(s, RelExpr::shared(ctx_.bin(Kind::Eq, cond.l, cond.r)));
    s.stack.push_back(mk_ite(ctx_, cond, a, b));
    return;
  }
  case Op::LocalGet: s.stack.push_back(f.locals[size_t(in.imm)]); return;
  case Op::LocalSet: f.locals[size_t(in.imm)] = pop(s); return;
  case Op::LocalTee: f.locals[size_t(in.imm)] = s.stack.back(); return;
  case Op::GlobalGet: s.stack.push_back(s.globals[size_t(in.imm)]); return;
  case Op::GlobalSet: s.globals[size_t(in.imm)] = pop(s); return;
  case Op::I32Const:
    s.stack.push_back(RelExpr::shared(ctx_.constant(uint64_t(in.imm), 32)));
    return;
  case Op::I64Const:
    s.stack.push_back(RelExpr::shared(ctx_.constant(uint64_t(in.imm), 64)));
    return;
  default: break;
  }

  unsigned w = bit_width(info.type);
  switch (info.cls) {
  case OpClass::Load: {
    uint32_t visit = s.visits[in.id]++;
    RelExpr ea;
    access(s, in, ea, visit);
    if (s.dead)
      return;
    s.stack.push_back(s.mem.load(ctx_, ea, info.bytes, info.sign, w));
    return;
  }
  case OpClass::Store: {
    RelExpr v = pop(s);
    uint32_t visit = s.visits[in.id]++;
    RelExpr ea;
    access(s, in, ea, visit);
    if (s.dead)
      return;
    s.mem = s.mem.store(ctx_, ea, v, info.bytes);
    return;
  }
  case OpClass::Unary: {
    RelExpr a = pop(s);
    switch (info.arith) {
    case Arith::Ext8S: s.stack.push_back(mk_sext(ctx_, mk_extract(ctx_, a, 0, 8), w)); return;
    case Arith::Ext16S: s.stack.push_back(mk_sext(ctx_, mk_extract(ctx_, a, 0, 16), w)); return;
    case Arith::Ext32S: s.stack.push_back(mk_sext(ctx_, mk_extract(ctx_, a, 0, 32), w)); return;
    default: s.stack.push_back(mk_unop(ctx_, arith_kind(info.arith), a)); return;
    }
  }
  case OpClass::Compare: {
    if (info.arith == Arith::Eqz) {
      RelExpr a = pop(s);
      RelExpr z = RelExpr::shared(ctx_.constant(0, w));
      s.stack.push_back(mk_zext(ctx_, mk_binop(ctx_, Kind::Eq, a, z, false), 32));
      return;
    }
    RelExpr b = pop(s);
    RelExpr a = pop(s);
    s.stack.push_back(mk_zext(ctx_, mk_binop(ctx_, arith_kind(info.arith), a, b, false), 32));
    return;
  }
  case OpClass::Binary: {
    RelExpr b = pop(s);
    RelExpr a = pop(s);
    Arith ar = info.arith;
    if (ar == Arith::DivS || ar == Arith::DivU || ar == Arith::RemS || ar == Arith::RemU) {
      const Node* zero = ctx_.constant(0, w);
      RelExpr nz = simp(RelExpr{ctx_.bin(Kind::Ne, b.l, zero), ctx_.bin(Kind::Ne, b.r, zero)});
      if (nz.l->is_const(0) || nz.r->is_const(0)) {
        trap(s, in, "integer divide by zero");
        return;
      }
      add_pc(s, nz);
      if (ar == Arith::DivS) {
        const Node* min = ctx_.constant(uint64_t(1) << (w - 1), w);
        const Node* m1 = ctx_.constant(width_mask(w), w);
        auto ok = [&](const Node* x, const Node* y) {
          return ctx_.bool_not(
              ctx_.bool_and(ctx_.bin(Kind::Eq, x, min), ctx_.bin(Kind::Eq, y, m1)));
        };
        RelExpr no_ovf = simp(RelExpr{ok(a.l, b.l), ok(a.r, b.r)});
        if (no_ovf.l->is_const(0) || no_ovf.r->is_const(0)) {
          trap(s, in, "integer overflow");
          return;
        }
        add_pc(s, no_ovf);
      }
    }
    s.stack.push_back(mk_binop(ctx_, arith_kind(ar), a, b, false));
    return;
  }
  case OpClass::Convert: {
    RelExpr a = pop(s);
    switch (info.arith) {
    case Arith::Wrap: s.stack.push_back(mk_extract(ctx_, a, 0, 32)); return;
    case Arith::ExtendS: s.stack.push_back(mk_sext(ctx_, a, 64)); return;
    case Arith::ExtendU: s.stack.push_back(mk_zext(ctx_, a, 64)); return;
    default: break;
    }
    break;
  }
  default: break;
  }
  throw Error("UnsupportedInstruction",
              std::string("cannot execute ") + std::string(info.name));
}

AnalysisResult explore(const ModuleAst& ast, const EngineConfig& cfg, Solver& solver) {
  AnalysisResult res = Engine(ast, cfg, solver).explore();
  if (!cfg.invariants)
    return res;
  // Models of violations under a havocked loop state name havoc symbols,
  // not inputs. Look for an input-level witness by unrolling toward the
  // site; its cost stays out of the counters.
  std::map<uint32_t, std::optional<Verdict>> witnesses;
  for (Verdict& v : res.verdicts) {
    if (v.kind != VerdictKind::Violation || !v.summarized)
      continue;
    auto [it, fresh] = witnesses.try_emplace(v.site.instr);
    if (fresh) {
      EngineConfig wc = cfg;
      wc.invariants = false;
      wc.target = v.site.instr;
      wc.time_budget = std::max(0.0, cfg.time_budget - res.counters.wall_time);
      for (Verdict& w : Engine(ast, wc, solver).explore().verdicts)
        if (w.kind == VerdictKind::Violation) {
          it->second = std::move(w);
          break;
        }
    }
    if (it->second) {
      v.model = it->second->model;
      v.visit = it->second->visit;
      v.detail += " (witness from unrolled search)";
    }
  }
  solver.config().threshold = cfg.portfolio_threshold;
  return res;
}

} // namespace relct

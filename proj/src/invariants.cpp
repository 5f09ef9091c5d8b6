#include "relct/invariants.hpp"

#include <algorithm>

namespace relct {

namespace {

void callees_of(const ModuleAst& ast, const std::vector<Instr>& body, std::set<uint32_t>& out) {
  for_each_instr(body, [&](const Instr& in) {
    std::vector<uint32_t> next;
    if (in.op == Op::Call)
      next.push_back(uint32_t(in.imm));
    else if (in.op == Op::CallIndirect)
      for (uint32_t f : ast.table)
        if (f < ast.functions.size())
          next.push_back(f);
    for (uint32_t f : next)
      if (out.insert(f).second)
        callees_of(ast, ast.functions[f].body, out);
  });
}

unsigned slot_width(const ModuleAst& ast, const SymState& s, const Slot& x) {
  switch (x.kind) {
  case Slot::Kind::Local:
    return bit_width(ast.functions[s.frames.back().func].local_type(x.index));
  case Slot::Kind::Global: return bit_width(ast.globals[x.index].type);
  default: return 8;
  }
}

RelExpr slot_value(Engine& e, const SymState& s, const Slot& x) {
  switch (x.kind) {
  case Slot::Kind::Local: return s.frames.back().locals[x.index];
  case Slot::Kind::Global: return s.globals[x.index];
  default: return s.mem.load_byte(e.ctx(), RelExpr::shared(e.ctx().constant(x.index, 32)));
  }
}

void assign(Engine& e, SymState& s, const Slot& x, const RelExpr& v) {
  switch (x.kind) {
  case Slot::Kind::Local: s.frames.back().locals[x.index] = v; break;
  case Slot::Kind::Global: s.globals[x.index] = v; break;
  default:
    s.mem = s.mem.store(e.ctx(), RelExpr::shared(e.ctx().constant(x.index, 32)), v, 1);
    break;
  }
}

// Stores made since `since`. Sets `whole` for symbolic targets or when the
// memory base was replaced.
void stores_since(const SymMemory& mem, const SymMemory& since, std::set<Slot>& bytes,
                  bool& whole) {
  if (mem.base_ptr() != since.base_ptr()) {
    whole = true;
    return;
  }
  for (const SymMemory::Record* r = mem.head(); r && r != since.head(); r = r->next.get()) {
    if (r->index.is_const())
      bytes.insert({Slot::Kind::Byte, uint32_t(r->index.l->value)});
    else
      whole = true;
  }
}

// Whether every byte outside the secret ranges is public in `s`, given
// that it was when the chain segment ending at `since` began.
bool layout_holds(Engine& e, const SymState& s, const SymMemory::Record* since) {
  const MemBase& base = s.mem.base();
  if (base.mode() == MemBase::Mode::AllSecret)
    return false;
  for (const SymMemory::Record* r = s.mem.head(); r && r != since; r = r->next.get()) {
    if (!r->index.is_shared())
      return false;
    if (r->index.is_const() && base.is_secret(uint32_t(r->index.l->value)))
      continue;
    if (!e.provably_public(s, r->value))
      return false;
  }
  return true;
}

struct Round {
  std::vector<SymState> exits;
  bool escalate = false;
  bool assert_ok = true;
  std::string failure;
};

} // namespace

std::set<Slot> syntactic_modified(const ModuleAst& ast, const Instr& loop) {
  std::set<Slot> out;
  for_each_instr(loop.body, [&](const Instr& in) {
    if (in.op == Op::LocalSet || in.op == Op::LocalTee)
      out.insert({Slot::Kind::Local, uint32_t(in.imm)});
    else if (in.op == Op::GlobalSet)
      out.insert({Slot::Kind::Global, uint32_t(in.imm)});
  });
  std::set<uint32_t> callees;
  callees_of(ast, loop.body, callees);
  for (uint32_t f : callees)
    for_each_instr(ast.functions[f].body, [&](const Instr& in) {
      if (in.op == Op::GlobalSet)
        out.insert({Slot::Kind::Global, uint32_t(in.imm)});
    });
  return out;
}

std::vector<SymState> analyze_loop(Engine& e, const SymState& header, const Instr& loop) {
  ExprContext& ctx = e.ctx();
  const ModuleAst& ast = e.ast();
  const uint64_t watch = header.frames.back().labels.back().instance;
  const bool live = header.checks;

  // One iteration from the header, checks off: memory footprint and the
  // values V_p is inferred from.
  SymState pre = header;
  pre.checks = false;
  std::vector<SymState> firsts = e.run({pre}, watch).iteration_ends;

  std::set<Slot> V = syntactic_modified(ast, loop);
  bool whole = false;
  for (const SymState& st : firsts)
    stores_since(st.mem, header.mem, V, whole);

  LoopInvariant inv;
  inv.func = ast.functions[header.frames.back().func].name;
  inv.instr = loop.id;
  inv.loc = loop.loc;

  size_t verdict_mark = e.partial().verdicts.size();
  size_t inv_mark = e.partial().invariants.size();
  std::set<Slot> vp;
  std::map<Slot, uint64_t> binds;
  std::set<Slot> classified;

  auto classify = [&](const Slot& x) {
    if (!classified.insert(x).second)
      return;
    RelExpr v0 = slot_value(e, header, x);
    if (!e.provably_public(header, v0))
      return;
    bool same_const = v0.is_const();
    for (const SymState& st : firsts) {
      RelExpr v = slot_value(e, st, x);
      if (!e.provably_public(st, v))
        return;
      same_const = same_const && v == v0;
    }
    vp.insert(x);
    if (same_const)
      binds[x] = v0.l->value;
  };

  for (int round = 0;; ++round) {
    for (const Slot& x : V)
      classify(x);
    bool policy = true;
    if (whole) {
      policy = layout_holds(e, header, nullptr);
      for (const SymState& st : firsts)
        policy = policy && layout_holds(e, st, nullptr);
    }

    // Havoc and assume.
    SymState h = header;
    h.summarized = true;
    for (const Slot& x : V) {
      if (whole && x.kind == Slot::Kind::Byte)
        continue;
      unsigned w = slot_width(ast, h, x);
      std::string name = e.fresh_name("inv") + "_" + x.name();
      RelExpr v;
      if (auto it = binds.find(x); it != binds.end())
        v = RelExpr::shared(ctx.constant(it->second, w));
      else if (vp.count(x))
        v = RelExpr::shared(ctx.sym(name, Side::Shared, w));
      else
        v = RelExpr::pair(ctx.sym(name, Side::L, w), ctx.sym(name, Side::R, w));
      assign(e, h, x, v);
    }
    if (whole) {
      uint32_t g = e.fresh_generation();
      h.mem = SymMemory(policy ? MemBase::havoc_policy(ctx, g, ast)
                               : MemBase::all_secret(ctx, g, header.mem.size()));
    }

    Engine::RunOutcome out = e.run({h}, watch);

    // Assert at every back edge.
    Round r;
    r.exits = std::move(out.exits);
    for (const SymState& st : out.iteration_ends) {
      if (!whole) {
        std::set<Slot> touched;
        bool sym = false;
        stores_since(st.mem, h.mem, touched, sym);
        for (const Slot& b : touched)
          if (!V.count(b))
            r.escalate = true, V.insert(b);
        if (sym)
          r.escalate = true;
      }
      if (r.escalate || !r.assert_ok)
        continue;
      for (const Slot& x : vp) {
        if (whole && x.kind == Slot::Kind::Byte)
          continue;
        RelExpr v = slot_value(e, st, x);
        bool ok;
        if (auto it = binds.find(x); it != binds.end()) {
          const Node* c = ctx.constant(it->second, v.width());
          ok = e.decide(QueryKind::InvariantAssert, st,
                        {ctx.bool_or(ctx.bin(Kind::Ne, v.l, c), ctx.bin(Kind::Ne, v.r, c))})
                   .status == SolverStatus::Unsat;
        } else {
          ok = v.is_shared() || e.decide(QueryKind::InvariantAssert, st,
                                         {ctx.bin(Kind::Ne, v.l, v.r)})
                                        .status == SolverStatus::Unsat;
        }
        if (!ok) {
          r.assert_ok = false;
          r.failure = x.name();
          break;
        }
      }
      if (r.assert_ok && whole && policy && !layout_holds(e, st, nullptr)) {
        r.assert_ok = false;
        r.failure = Slot{Slot::Kind::WholeMemory, 0}.name();
      }
    }

    if (r.escalate) {
      // The footprint grew: discard this round's findings and retry.
      e.partial().verdicts.resize(verdict_mark);
      e.partial().invariants.resize(inv_mark);
      if (round >= 2) {
        whole = true;
        for (auto it = V.begin(); it != V.end();)
          it = it->kind == Slot::Kind::Byte ? V.erase(it) : std::next(it);
      }
      continue;
    }

    if (whole)
      V.insert({Slot::Kind::WholeMemory, 0});
    inv.modified.assign(V.begin(), V.end());
    for (const Slot& x : vp)
      if (!(whole && x.kind == Slot::Kind::Byte))
        inv.public_subset.push_back(x);
    for (const auto& [x, c] : binds)
      if (!(whole && x.kind == Slot::Kind::Byte))
        inv.const_bindings[x] = c;
    inv.policy_layout = policy;
    inv.assert_ok = r.assert_ok;
    inv.failure = r.failure;
    if (live) {
      if (!r.assert_ok)
        e.mark_incomplete("invariant_assert_failed");
      e.invariants().push_back(inv);
    }
    for (SymState& x : r.exits)
      x.checks = header.checks;
    return std::move(r.exits);
  }
}

} // namespace relct

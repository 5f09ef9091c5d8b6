#include <gtest/gtest.h>

#include "oracle.hpp"
#include "relct/memory.hpp"
#include "relct/wat.hpp"

using namespace relct;

namespace {

const char* kModule = R"(
(module
  (memory 1)
  (data (i32.const 16) "\01\02\03\04")
  (func $f (param $x i32) (result i32) local.get $x))
(public (i32.const 0) (i32.const 31))
(secret (i32.const 32) (i32.const 47))
(symb_exec "f" (i32.sconst l1))
)";

RelExpr C(ExprContext& ctx, uint64_t v, unsigned w = 32) {
  return RelExpr::shared(ctx.constant(v, w));
}

struct Fixture {
  ModuleAst ast = wat::parse_module(kModule);
  ExprContext ctx;
  std::shared_ptr<const MemBase> base = MemBase::from_module(ctx, 0, ast);
  SymMemory mem{base};
};

// Flat byte array per side, seeded from the same valuation as the
// symbolic base.
struct Flat {
  std::vector<uint8_t> bytes;

  Flat(const MemBase& base, const oracle::Env& env, Side side) : bytes(256) {
    for (uint32_t a = 0; a < bytes.size(); ++a) {
      if (base.is_secret(a))
        bytes[a] = uint8_t(env.values.at(smt_symbol(base.secret_name(a), side)));
      else if (auto d = base.data().find(a); d != base.data().end())
        bytes[a] = d->second;
      else
        bytes[a] = env.arrays.at("M0").at(a);
    }
  }
  void store(uint32_t a, uint64_t v, unsigned n) {
    for (unsigned i = 0; i < n; ++i)
      bytes[a + i] = uint8_t(v >> (8 * i));
  }
  uint64_t load(uint32_t a, unsigned n) const {
    uint64_t v = 0;
    for (unsigned i = 0; i < n; ++i)
      v |= uint64_t(bytes[a + i]) << (8 * i);
    return v;
  }
};

} // namespace

TEST(Memory, StoreIsLittleEndianBytes) {
  Fixture f;
  SymMemory m = f.mem.store(f.ctx, C(f.ctx, 100), C(f.ctx, 1), 4);
  EXPECT_EQ(m.chain_length(), 4u);
  uint64_t expect[] = {1, 0, 0, 0};
  for (uint32_t i = 0; i < 4; ++i) {
    RelExpr b = m.load_byte(f.ctx, C(f.ctx, 100 + i));
    ASSERT_TRUE(b.is_const());
    EXPECT_EQ(b.l->value, expect[i]);
  }
  RelExpr w = m.load(f.ctx, C(f.ctx, 100), 4, false, 32);
  ASSERT_TRUE(w.is_const());
  EXPECT_EQ(w.l->value, 1u);
}

TEST(Memory, ReadOverWriteAndSkip) {
  Fixture f;
  RelExpr v = RelExpr::shared(f.ctx.sym("l5", Side::Shared, 32));
  SymMemory m = f.mem.store(f.ctx, C(f.ctx, 100), v, 4);
  m = m.store(f.ctx, C(f.ctx, 200), C(f.ctx, 7), 4);
  RelExpr r = simplify(f.ctx, m.load(f.ctx, C(f.ctx, 100), 4, false, 32));
  EXPECT_EQ(r, v);
}

TEST(Memory, SecretByteIsPair) {
  Fixture f;
  RelExpr h = f.mem.load_byte(f.ctx, C(f.ctx, 40));
  EXPECT_FALSE(h.is_shared());
  EXPECT_EQ(h.l->kind, Kind::Sym);
  EXPECT_EQ(h.r->kind, Kind::Sym);
  RelExpr p = f.mem.load(f.ctx, C(f.ctx, 8), 4, false, 32);
  EXPECT_TRUE(p.is_shared());
  // Straddling the boundary taints the whole value.
  RelExpr s = f.mem.load(f.ctx, C(f.ctx, 30), 4, false, 32);
  EXPECT_FALSE(s.is_shared());
}

TEST(Memory, DataSegmentBytesAreConstants) {
  Fixture f;
  RelExpr w = f.mem.load(f.ctx, C(f.ctx, 16), 4, false, 32);
  ASSERT_TRUE(w.is_const());
  EXPECT_EQ(w.l->value, 0x04030201u);
  RelExpr s = f.mem.load(f.ctx, C(f.ctx, 19), 1, true, 32);
  ASSERT_TRUE(s.is_const());
  EXPECT_EQ(s.l->value, 4u);
}

TEST(Memory, SignExtension) {
  Fixture f;
  SymMemory m = f.mem.store(f.ctx, C(f.ctx, 50), C(f.ctx, 0x80, 8), 1);
  RelExpr s = m.load(f.ctx, C(f.ctx, 50), 1, true, 64);
  ASSERT_TRUE(s.is_const());
  EXPECT_EQ(s.l->value, 0xffffffffffffff80ull);
}

TEST(Memory, SymbolicIndexYieldsSelect) {
  Fixture f;
  RelExpr i = RelExpr::shared(f.ctx.sym("l9", Side::Shared, 32));
  SymMemory m = f.mem.store(f.ctx, i, C(f.ctx, 3, 8), 1);
  RelExpr r = m.load_byte(f.ctx, C(f.ctx, 5));
  EXPECT_FALSE(r.is_const());
  EXPECT_EQ(r.l->kind, Kind::Select);
}

TEST(Memory, Persistence) {
  Fixture f;
  SymMemory a = f.mem.store(f.ctx, C(f.ctx, 60), C(f.ctx, 0x11, 8), 1);
  SymMemory b = a.store(f.ctx, C(f.ctx, 60), C(f.ctx, 0x22, 8), 1);
  EXPECT_EQ(a.load_byte(f.ctx, C(f.ctx, 60)).l->value, 0x11u);
  EXPECT_EQ(b.load_byte(f.ctx, C(f.ctx, 60)).l->value, 0x22u);
  EXPECT_EQ(a.chain_length(), 1u);
}

// Random store/load programs against a flat array, with concrete and
// symbolic indices and a random valuation of every leaf.
TEST(MemoryProperty, MatchesFlatArray) {
  oracle::Gen gen(2024);
  for (int round = 0; round < 200; ++round) {
    Fixture f;
    oracle::Env env;
    for (uint32_t a = 0; a < 256; ++a) {
      env.arrays["M0"][a] = uint8_t(gen.pick(256));
      if (f.base->is_secret(a)) {
        env.values[smt_symbol(f.base->secret_name(a), Side::L)] = gen.pick(256);
        env.values[smt_symbol(f.base->secret_name(a), Side::R)] = gen.pick(256);
      }
    }
    Flat fl(*f.base, env, Side::L), fr(*f.base, env, Side::R);
    SymMemory m = f.mem;
    static const unsigned widths[] = {1, 2, 4, 8};
    for (int step = 0; step < 12; ++step) {
      unsigned n = widths[gen.pick(4)];
      uint32_t addr = gen.pick(256 - n);
      RelExpr idx = C(f.ctx, addr);
      if (gen.pick(3) == 0) {
        std::string name = "l_i" + std::to_string(step);
        env.values[name] = addr;
        idx = RelExpr::shared(f.ctx.sym(name, Side::Shared, 32));
      }
      if (gen.pick(2)) {
        uint64_t v = uint64_t(gen.pick(1u << 31)) * 7919 + gen.pick(1000);
        RelExpr val = C(f.ctx, v, 64);
        if (gen.pick(2)) {
          std::string name = "l_v" + std::to_string(step);
          env.values[name] = v;
          val = RelExpr::shared(f.ctx.sym(name, Side::Shared, 64));
        }
        m = m.store(f.ctx, idx, val, n);
        fl.store(addr, v, n);
        fr.store(addr, v, n);
      } else {
        RelExpr r = m.load(f.ctx, idx, n, false, 64);
        ASSERT_EQ(oracle::eval(r.l, env), fl.load(addr, n)) << "round " << round;
        ASSERT_EQ(oracle::eval(r.r, env), fr.load(addr, n)) << "round " << round;
      }
    }
  }
}

#pragma once

// Reference semantics for expression DAGs, written against the SMT-LIB
// bit-vector definitions rather than against the library's folder.

#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "relct/expr.hpp"
#include "relct/solver.hpp"

namespace oracle {

using relct::Kind;
using relct::Node;

inline uint64_t mask(unsigned w) { return w >= 64 ? ~uint64_t(0) : (uint64_t(1) << w) - 1; }

inline int64_t as_signed(uint64_t v, unsigned w) {
  if (w == 64)
    return int64_t(v);
  uint64_t sign = uint64_t(1) << (w - 1);
  return (v & sign) ? int64_t(v | ~mask(w)) : int64_t(v);
}

// Leaf values keyed by SMT name (smt_symbol / array_symbol), so a solver
// model can be plugged in directly.
struct Env {
  std::map<std::string, uint64_t> values;
  std::map<std::string, std::map<uint32_t, uint8_t>> arrays;
  uint8_t array_default = 0;

  static Env from_model(const relct::Model& m) {
    Env e;
    e.values = m.values;
    for (const auto& [name, a] : m.arrays) {
      e.array_defaults[name] = a.fallback;
      for (const auto& [k, v] : a.entries)
        e.arrays[name][k] = v;
    }
    return e;
  }
  std::map<std::string, uint8_t> array_defaults;
};

inline uint64_t eval(const Node* n, const Env& env);

inline uint8_t read_array(const Node* arr, uint64_t idx, const Env& env) {
  while (arr->kind == Kind::ArrStore) {
    if (eval(arr->b, env) == idx)
      return uint8_t(eval(arr->c, env));
    arr = arr->a;
  }
  std::string name = relct::array_symbol(arr->aux, arr->side);
  auto a = env.arrays.find(name);
  if (a != env.arrays.end()) {
    auto v = a->second.find(uint32_t(idx));
    if (v != a->second.end())
      return v->second;
  }
  auto d = env.array_defaults.find(name);
  return d == env.array_defaults.end() ? env.array_default : d->second;
}

inline uint64_t binary(Kind k, uint64_t x, uint64_t y, unsigned w) {
  uint64_t m = mask(w);
  int64_t sx = as_signed(x, w), sy = as_signed(y, w);
  unsigned sh = unsigned(y % w);
  switch (k) {
  case Kind::Add: return (x + y) & m;
  case Kind::Sub: return (x - y) & m;
  case Kind::Mul: return (x * y) & m;
  // SMT-LIB: x/0 = all ones, x%0 = x; signed forms via magnitudes.
  case Kind::DivU: return y == 0 ? m : x / y;
  case Kind::RemU: return y == 0 ? x : x % y;
  case Kind::DivS: {
    uint64_t ax = sx < 0 ? (0 - x) & m : x, ay = sy < 0 ? (0 - y) & m : y;
    uint64_t q = ay == 0 ? m : ax / ay;
    return (sx < 0) != (sy < 0) ? (0 - q) & m : q;
  }
  case Kind::RemS: {
    uint64_t ax = sx < 0 ? (0 - x) & m : x, ay = sy < 0 ? (0 - y) & m : y;
    uint64_t r = ay == 0 ? ax : ax % ay;
    return sx < 0 ? (0 - r) & m : r;
  }
  case Kind::And: return x & y;
  case Kind::Or: return x | y;
  case Kind::Xor: return x ^ y;
  case Kind::Shl: return sh >= 64 ? 0 : (x << sh) & m;
  case Kind::ShrU: return x >> sh;
  case Kind::ShrS: return uint64_t(sx >> sh) & m;
  case Kind::Rotl: return sh == 0 ? x : ((x << sh) | (x >> (w - sh))) & m;
  case Kind::Rotr: return sh == 0 ? x : ((x >> sh) | (x << (w - sh))) & m;
  case Kind::Eq: return x == y;
  case Kind::Ne: return x != y;
  case Kind::LtS: return sx < sy;
  case Kind::LtU: return x < y;
  case Kind::LeS: return sx <= sy;
  case Kind::LeU: return x <= y;
  case Kind::GtS: return sx > sy;
  case Kind::GtU: return x > y;
  case Kind::GeS: return sx >= sy;
  case Kind::GeU: return x >= y;
  default: throw std::logic_error("not binary");
  }
}

inline uint64_t eval(const Node* n, const Env& env) {
  switch (n->kind) {
  case Kind::Const: return n->value;
  case Kind::Sym: {
    auto it = env.values.find(relct::smt_symbol(n->name, n->side));
    return it == env.values.end() ? 0 : it->second & mask(n->width);
  }
  case Kind::Clz: {
    uint64_t x = eval(n->a, env);
    unsigned c = 0;
    for (int i = int(n->width) - 1; i >= 0 && !((x >> i) & 1); --i)
      ++c;
    return c;
  }
  case Kind::Ctz: {
    uint64_t x = eval(n->a, env);
    unsigned c = 0;
    while (c < n->width && !((x >> c) & 1))
      ++c;
    return c;
  }
  case Kind::Popcnt: {
    uint64_t x = eval(n->a, env);
    unsigned c = 0;
    for (unsigned i = 0; i < n->width; ++i)
      c += (x >> i) & 1;
    return c;
  }
  case Kind::ZExt: return eval(n->a, env);
  case Kind::SExt: return uint64_t(as_signed(eval(n->a, env), n->a->width)) & mask(n->width);
  case Kind::Extract: return (eval(n->a, env) >> n->aux) & mask(n->width);
  case Kind::Concat: return (eval(n->a, env) << n->b->width) | eval(n->b, env);
  case Kind::Ite: return eval(n->a, env) ? eval(n->b, env) : eval(n->c, env);
  case Kind::Select: return read_array(n->a, eval(n->b, env), env);
  case Kind::ArrBase:
  case Kind::ArrStore: throw std::logic_error("array term has no scalar value");
  default: return binary(n->kind, eval(n->a, env), eval(n->b, env), n->a->width);
  }
}

// Random width-8 expression over the given leaves.
class Gen {
public:
  explicit Gen(uint32_t seed) : rng_(seed) {}

  uint32_t pick(uint32_t n) { return std::uniform_int_distribution<uint32_t>(0, n - 1)(rng_); }
  std::mt19937& rng() { return rng_; }

  const Node* expr(relct::ExprContext& ctx, const std::vector<const Node*>& leaves, int depth) {
    if (depth == 0 || pick(4) == 0) {
      if (pick(3) == 0) {
        static const uint64_t interesting[] = {0, 1, 2, 7, 0x7f, 0x80, 0xff};
        return ctx.constant(pick(2) ? interesting[pick(7)] : pick(256), 8);
      }
      return leaves[pick(uint32_t(leaves.size()))];
    }
    static const Kind bins[] = {Kind::Add,  Kind::Sub,  Kind::Mul,  Kind::DivU, Kind::DivS,
                                Kind::RemU, Kind::RemS, Kind::And,  Kind::Or,   Kind::Xor,
                                Kind::Shl,  Kind::ShrU, Kind::ShrS, Kind::Rotl, Kind::Rotr};
    static const Kind cmps[] = {Kind::Eq,  Kind::Ne,  Kind::LtS, Kind::LtU, Kind::LeS,
                                Kind::LeU, Kind::GtS, Kind::GtU, Kind::GeS, Kind::GeU};
    const Node* a = expr(ctx, leaves, depth - 1);
    switch (pick(8)) {
    case 0: return ctx.un(pick(2) ? Kind::Popcnt : Kind::Clz, a);
    case 1: {
      const Node* c = ctx.bin(cmps[pick(10)], a, expr(ctx, leaves, depth - 1));
      return ctx.ite(c, expr(ctx, leaves, depth - 1), expr(ctx, leaves, depth - 1));
    }
    case 2: return ctx.extract(ctx.zext(a, 16), 0, 8);
    case 3: return ctx.extract(ctx.sext(a, 16), 8, 8);
    default: return ctx.bin(bins[pick(15)], a, expr(ctx, leaves, depth - 1));
    }
  }

  // Width-1 condition.
  const Node* cond(relct::ExprContext& ctx, const std::vector<const Node*>& leaves, int depth) {
    static const Kind cmps[] = {Kind::Eq,  Kind::Ne,  Kind::LtS, Kind::LtU, Kind::LeS,
                                Kind::LeU, Kind::GtS, Kind::GtU, Kind::GeS, Kind::GeU};
    return ctx.bin(cmps[pick(10)], expr(ctx, leaves, depth), expr(ctx, leaves, depth));
  }

private:
  std::mt19937 rng_;
};

} // namespace oracle

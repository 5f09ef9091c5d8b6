#include "relct/expr.hpp"

#include <bit>
#include <functional>

#include "relct/error.hpp"

namespace relct {

const char* kind_name(Kind k) {
  switch (k) {
  case Kind::Const: return "const";
  case Kind::Sym: return "sym";
  case Kind::Add: return "add";
  case Kind::Sub: return "sub";
  case Kind::Mul: return "mul";
  case Kind::DivS: return "div_s";
  case Kind::DivU: return "div_u";
  case Kind::RemS: return "rem_s";
  case Kind::RemU: return "rem_u";
  case Kind::And: return "and";
  case Kind::Or: return "or";
  case Kind::Xor: return "xor";
  case Kind::Shl: return "shl";
  case Kind::ShrS: return "shr_s";
  case Kind::ShrU: return "shr_u";
  case Kind::Rotl: return "rotl";
  case Kind::Rotr: return "rotr";
  case Kind::Eq: return "eq";
  case Kind::Ne: return "ne";
  case Kind::LtS: return "lt_s";
  case Kind::LtU: return "lt_u";
  case Kind::LeS: return "le_s";
  case Kind::LeU: return "le_u";
  case Kind::GtS: return "gt_s";
  case Kind::GtU: return "gt_u";
  case Kind::GeS: return "ge_s";
  case Kind::GeU: return "ge_u";
  case Kind::Clz: return "clz";
  case Kind::Ctz: return "ctz";
  case Kind::Popcnt: return "popcnt";
  case Kind::ZExt: return "zext";
  case Kind::SExt: return "sext";
  case Kind::Extract: return "extract";
  case Kind::Concat: return "concat";
  case Kind::Ite: return "ite";
  case Kind::Select: return "select";
  case Kind::ArrBase: return "mem";
  case Kind::ArrStore: return "store";
  }
  return "?";
}

bool is_compare(Kind k) { return k >= Kind::Eq && k <= Kind::GeU; }

bool is_commutative(Kind k) {
  switch (k) {
  case Kind::Add:
  case Kind::Mul:
  case Kind::And:
  case Kind::Or:
  case Kind::Xor:
  case Kind::Eq:
  case Kind::Ne:
    return true;
  default:
    return false;
  }
}

uint64_t width_mask(unsigned w) { return w >= 64 ? ~0ull : (1ull << w) - 1; }

int64_t sign_extend(uint64_t v, unsigned w) {
  if (w == 0 || w >= 64)
    return int64_t(v);
  uint64_t m = width_mask(w);
  v &= m;
  if (v >> (w - 1))
    v |= ~m;
  return int64_t(v);
}

namespace {

bool is_binary_arith(Kind k) { return k >= Kind::Add && k <= Kind::Rotr; }

Kind flip_compare(Kind k) {
  switch (k) {
  case Kind::LtS: return Kind::GtS;
  case Kind::LtU: return Kind::GtU;
  case Kind::LeS: return Kind::GeS;
  case Kind::LeU: return Kind::GeU;
  case Kind::GtS: return Kind::LtS;
  case Kind::GtU: return Kind::LtU;
  case Kind::GeS: return Kind::LeS;
  case Kind::GeU: return Kind::LeU;
  default: return k;
  }
}

// Bitvector semantics shared with the SMT encoding: shift and rotate
// amounts are taken modulo the width; division follows SMT-LIB for a zero
// divisor (the engine guards real divisions separately).
uint64_t eval_bin(Kind k, unsigned w, uint64_t x, uint64_t y) {
  uint64_t m = width_mask(w);
  x &= m;
  y &= m;
  int64_t sx = sign_extend(x, w);
  int64_t sy = sign_extend(y, w);
  unsigned sh = unsigned(y % w);
  switch (k) {
  case Kind::Add: return (x + y) & m;
  case Kind::Sub: return (x - y) & m;
  case Kind::Mul: return (x * y) & m;
  case Kind::DivU: return y == 0 ? m : x / y;
  case Kind::RemU: return y == 0 ? x : x % y;
  case Kind::DivS:
    if (y == 0)
      return sx < 0 ? 1 : m;
    if (sy == -1)
      return (0 - x) & m;
    return uint64_t(sx / sy) & m;
  case Kind::RemS:
    if (y == 0)
      return x;
    if (sy == -1)
      return 0;
    return uint64_t(sx % sy) & m;
  case Kind::And: return x & y;
  case Kind::Or: return x | y;
  case Kind::Xor: return x ^ y;
  case Kind::Shl: return (x << sh) & m;
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
  default: return 0;
  }
}

uint64_t eval_un(Kind k, unsigned w, uint64_t x) {
  x &= width_mask(w);
  switch (k) {
  case Kind::Clz: return x == 0 ? w : unsigned(std::countl_zero(x)) - (64 - w);
  case Kind::Ctz: return x == 0 ? w : unsigned(std::countr_zero(x));
  case Kind::Popcnt: return unsigned(std::popcount(x));
  default: return 0;
  }
}

void hash_mix(size_t& h, size_t v) { h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2); }

} // namespace

size_t ExprContext::KeyHash::operator()(const Node* n) const {
  size_t h = size_t(n->kind);
  hash_mix(h, size_t(n->side));
  hash_mix(h, n->width);
  hash_mix(h, n->aux);
  hash_mix(h, std::hash<uint64_t>{}(n->value));
  hash_mix(h, std::hash<const void*>{}(n->a));
  hash_mix(h, std::hash<const void*>{}(n->b));
  hash_mix(h, std::hash<const void*>{}(n->c));
  if (!n->name.empty())
    hash_mix(h, std::hash<std::string>{}(n->name));
  return h;
}

bool ExprContext::KeyEq::operator()(const Node* x, const Node* y) const {
  return x->kind == y->kind && x->side == y->side && x->width == y->width &&
         x->aux == y->aux && x->value == y->value && x->a == y->a && x->b == y->b &&
         x->c == y->c && x->name == y->name;
}

const Node* ExprContext::intern(Node n) {
  auto it = table_.find(&n);
  if (it != table_.end())
    return *it;
  n.id = uint32_t(nodes_.size());
  nodes_.push_back(std::move(n));
  const Node* p = &nodes_.back();
  table_.insert(p);
  return p;
}

const Node* ExprContext::constant(uint64_t v, unsigned w) {
  if (w == 0 || w > 64)
    throw WidthMismatch("constant width " + std::to_string(w));
  Node n;
  n.kind = Kind::Const;
  n.width = uint16_t(w);
  n.value = v & width_mask(w);
  return intern(std::move(n));
}

const Node* ExprContext::sym(const std::string& name, Side side, unsigned w) {
  if (w == 0 || w > 64)
    throw WidthMismatch("symbol width " + std::to_string(w));
  Node n;
  n.kind = Kind::Sym;
  n.side = side;
  n.width = uint16_t(w);
  n.name = name;
  return intern(std::move(n));
}

const Node* ExprContext::array(uint32_t generation, Side side) {
  Node n;
  n.kind = Kind::ArrBase;
  n.side = side;
  n.aux = generation;
  return intern(std::move(n));
}

const Node* ExprContext::bin(Kind k, const Node* a, const Node* b) {
  return build(k, 0, a, b, nullptr, 0, false);
}
const Node* ExprContext::un(Kind k, const Node* a) { return build(k, 0, a, nullptr, nullptr, 0, false); }
const Node* ExprContext::zext(const Node* a, unsigned w) {
  return build(Kind::ZExt, w, a, nullptr, nullptr, 0, false);
}
const Node* ExprContext::sext(const Node* a, unsigned w) {
  return build(Kind::SExt, w, a, nullptr, nullptr, 0, false);
}
const Node* ExprContext::extract(const Node* a, unsigned lo, unsigned w) {
  return build(Kind::Extract, w, a, nullptr, nullptr, lo, false);
}
const Node* ExprContext::concat(const Node* hi, const Node* lo) {
  return build(Kind::Concat, 0, hi, lo, nullptr, 0, false);
}
const Node* ExprContext::ite(const Node* c, const Node* t, const Node* e) {
  return build(Kind::Ite, 0, c, t, e, 0, false);
}
const Node* ExprContext::select(const Node* arr, const Node* idx) {
  return build(Kind::Select, 0, arr, idx, nullptr, 0, false);
}
const Node* ExprContext::store(const Node* arr, const Node* idx, const Node* val) {
  return build(Kind::ArrStore, 0, arr, idx, val, 0, false);
}

const Node* ExprContext::make(Kind k, unsigned w, const Node* a, const Node* b, const Node* c,
                              uint32_t aux, bool full) {
  return build(k, w, a, b, c, aux, full);
}

// Rewrite rules. Children passed in are already in normal form; every
// node a rule produces goes back through build(full) so results are
// normal too.
class Rewriter {
public:
  explicit Rewriter(ExprContext& ctx) : x_(ctx) {}

  const Node* S(Kind k, const Node* a, const Node* b) {
    return x_.build(k, 0, a, b, nullptr, 0, true);
  }
  const Node* C(uint64_t v, unsigned w) { return x_.constant(v, w); }

  const Node* rewrite(Kind k, unsigned w, const Node* a, const Node* b, const Node* c,
                      uint32_t aux) {
    if (is_binary_arith(k) || is_compare(k)) {
      // Constants go on the left.
      if (b->is_const() && !a->is_const()) {
        if (is_commutative(k))
          return S(k, b, a);
        if (is_compare(k))
          return S(flip_compare(k), b, a);
      }
      return is_compare(k) ? compare(k, a, b) : arith(k, a, b);
    }
    switch (k) {
    case Kind::Ite:
      if (a->is_const())
        return a->value ? b : c;
      if (b == c)
        return b;
      if (b->width == 1 && b->is_const(1) && c->is_const(0))
        return a;
      if (b->width == 1 && b->is_const(0) && c->is_const(1))
        return S(Kind::Xor, C(1, 1), a);
      return nullptr;
    case Kind::ZExt:
    case Kind::SExt:
      if (a->kind == k)
        return x_.build(k, w, a->a, nullptr, nullptr, 0, true);
      if (k == Kind::SExt && a->kind == Kind::ZExt && a->width > a->a->width)
        return x_.build(Kind::ZExt, w, a->a, nullptr, nullptr, 0, true);
      return nullptr;
    case Kind::Extract:
      return extract(a, aux, w);
    case Kind::Concat:
      if (a->kind == Kind::Extract && b->kind == Kind::Extract && a->a == b->a &&
          a->aux == b->aux + b->width)
        return x_.build(Kind::Extract, a->width + b->width, b->a, nullptr, nullptr, b->aux, true);
      if (a->is_const(0))
        return x_.build(Kind::ZExt, a->width + b->width, b, nullptr, nullptr, 0, true);
      return nullptr;
    case Kind::Select: {
      const Node* arr = a;
      while (arr->kind == Kind::ArrStore) {
        if (arr->b == b)
          return arr->c;
        if (arr->b->is_const() && b->is_const())
          arr = arr->a;
        else
          break;
      }
      if (arr != a)
        return x_.build(Kind::Select, 0, arr, b, nullptr, 0, true);
      return nullptr;
    }
    case Kind::ArrStore:
      if (a->kind == Kind::ArrStore && a->b == b)
        return x_.build(Kind::ArrStore, 0, a->a, b, c, 0, true);
      return nullptr;
    default:
      return nullptr;
    }
  }

private:
  ExprContext& x_;

  const Node* arith(Kind k, const Node* a, const Node* b) {
    unsigned w = a->width;
    uint64_t m = width_mask(w);
    switch (k) {
    case Kind::Add:
      if (a->is_const(0))
        return b;
      if (a->is_const() && b->kind == Kind::Add && b->a->is_const())
        return S(Kind::Add, C(a->value + b->a->value, w), b->b);
      if (a->is_const() && b->kind == Kind::Sub && b->a->is_const())
        return S(Kind::Sub, C(a->value + b->a->value, w), b->b);
      if (b->kind == Kind::Sub && b->b == a)
        return b->a;
      if (a->kind == Kind::Sub && a->b == b)
        return a->a;
      return nullptr;
    case Kind::Sub:
      if (a == b)
        return C(0, w);
      if (b->is_const())
        return S(Kind::Add, C(0 - b->value, w), a);
      if (a->is_const() && b->kind == Kind::Add && b->a->is_const())
        return S(Kind::Sub, C(a->value - b->a->value, w), b->b);
      if (a->is_const() && b->kind == Kind::Sub && b->a->is_const())
        return S(Kind::Add, C(a->value - b->a->value, w), b->b);
      if (a->kind == Kind::Add && a->a == b)
        return a->b;
      if (a->kind == Kind::Add && a->b == b)
        return a->a;
      if (b->kind == Kind::Add && b->a == a)
        return S(Kind::Sub, C(0, w), b->b);
      if (b->kind == Kind::Add && b->b == a)
        return S(Kind::Sub, C(0, w), b->a);
      if (a->kind == Kind::Sub && a->a == b)
        return S(Kind::Sub, C(0, w), a->b);
      return nullptr;
    case Kind::Mul:
      if (a->is_const(0))
        return a;
      if (a->is_const(1))
        return b;
      if (a->is_const() && b->kind == Kind::Mul && b->a->is_const())
        return S(Kind::Mul, C(a->value * b->a->value, w), b->b);
      return nullptr;
    case Kind::And:
      if (a->is_const(0))
        return a;
      if (a->is_const(m))
        return b;
      if (a == b)
        return a;
      if (a->is_const() && b->kind == Kind::And && b->a->is_const())
        return S(Kind::And, C(a->value & b->a->value, w), b->b);
      return nullptr;
    case Kind::Or:
      if (a->is_const(0))
        return b;
      if (a->is_const(m))
        return a;
      if (a == b)
        return a;
      if (a->is_const() && b->kind == Kind::Or && b->a->is_const())
        return S(Kind::Or, C(a->value | b->a->value, w), b->b);
      return nullptr;
    case Kind::Xor:
      if (a->is_const(0))
        return b;
      if (a == b)
        return C(0, w);
      if (a->is_const() && b->kind == Kind::Xor && b->a->is_const())
        return S(Kind::Xor, C(a->value ^ b->a->value, w), b->b);
      return nullptr;
    case Kind::Shl:
    case Kind::ShrU:
    case Kind::ShrS:
    case Kind::Rotl:
    case Kind::Rotr:
      if (b->is_const() && b->value % w == 0)
        return a;
      if (a->is_const(0))
        return a;
      if (a->is_const(m) && k != Kind::Shl && k != Kind::ShrU)
        return a;
      return nullptr;
    case Kind::DivU:
    case Kind::DivS:
      if (b->is_const(1))
        return a;
      return nullptr;
    case Kind::RemU:
    case Kind::RemS:
      if (b->is_const(1))
        return C(0, w);
      return nullptr;
    default:
      return nullptr;
    }
  }

  const Node* compare(Kind k, const Node* a, const Node* b) {
    unsigned w = a->width;
    if (a == b) {
      switch (k) {
      case Kind::Eq:
      case Kind::LeS:
      case Kind::LeU:
      case Kind::GeS:
      case Kind::GeU:
        return C(1, 1);
      default:
        return C(0, 1);
      }
    }
    if (k != Kind::Eq && k != Kind::Ne)
      return nullptr;
    bool eq = k == Kind::Eq;
    if (!a->is_const())
      return nullptr;
    if (w == 1) {
      // x == 1 is x; x == 0 is not x.
      return (a->value == 1) == eq ? b : S(Kind::Xor, C(1, 1), b);
    }
    if (b->kind == Kind::Add && b->a->is_const())
      return S(k, C(a->value - b->a->value, w), b->b);
    if (b->kind == Kind::Sub && b->a->is_const())
      return S(k, C(b->a->value - a->value, w), b->b);
    if (b->kind == Kind::Xor && b->a->is_const())
      return S(k, C(a->value ^ b->a->value, w), b->b);
    if (b->kind == Kind::ZExt) {
      const Node* inner = b->a;
      if (a->value & ~width_mask(inner->width))
        return C(eq ? 0 : 1, 1);
      return S(k, C(a->value, inner->width), inner);
    }
    if (b->kind == Kind::Ite && b->b->is_const() && b->c->is_const()) {
      bool t = (a->value == b->b->value) == eq;
      bool e = (a->value == b->c->value) == eq;
      return x_.build(Kind::Ite, 0, b->a, C(t, 1), C(e, 1), 0, true);
    }
    return nullptr;
  }

  const Node* extract(const Node* a, unsigned lo, unsigned w) {
    if (lo == 0 && w == a->width)
      return a;
    switch (a->kind) {
    case Kind::Extract:
      return x_.build(Kind::Extract, w, a->a, nullptr, nullptr, a->aux + lo, true);
    case Kind::Concat: {
      unsigned wl = a->b->width;
      if (lo + w <= wl)
        return x_.build(Kind::Extract, w, a->b, nullptr, nullptr, lo, true);
      if (lo >= wl)
        return x_.build(Kind::Extract, w, a->a, nullptr, nullptr, lo - wl, true);
      return nullptr;
    }
    case Kind::ZExt: {
      unsigned wx = a->a->width;
      if (lo + w <= wx)
        return x_.build(Kind::Extract, w, a->a, nullptr, nullptr, lo, true);
      if (lo >= wx)
        return C(0, w);
      return nullptr;
    }
    case Kind::SExt: {
      unsigned wx = a->a->width;
      if (lo + w <= wx)
        return x_.build(Kind::Extract, w, a->a, nullptr, nullptr, lo, true);
      return nullptr;
    }
    default:
      return nullptr;
    }
  }
};

const Node* ExprContext::build(Kind k, unsigned w, const Node* a, const Node* b, const Node* c,
                               uint32_t aux, bool full) {
  auto mismatch = [&](const std::string& why) -> WidthMismatch {
    return WidthMismatch(std::string(kind_name(k)) + ": " + why);
  };
  if (!a)
    throw mismatch("missing operand");
  Node n;
  n.kind = k;
  n.a = a;
  n.b = b;
  n.c = c;
  bool all_const = a->is_const() && (!b || b->is_const()) && (!c || c->is_const());
  if (is_binary_arith(k) || is_compare(k)) {
    if (!b || a->is_array() || b->is_array() || a->width != b->width)
      throw mismatch("operand widths " + std::to_string(a->width) + " and " +
                     std::to_string(b ? b->width : 0));
    n.width = is_compare(k) ? 1 : a->width;
    if (all_const)
      return constant(eval_bin(k, a->width, a->value, b->value), n.width);
  } else {
    switch (k) {
    case Kind::Clz:
    case Kind::Ctz:
    case Kind::Popcnt:
      if (a->is_array())
        throw mismatch("array operand");
      n.width = a->width;
      n.b = n.c = nullptr;
      if (a->is_const())
        return constant(eval_un(k, a->width, a->value), a->width);
      break;
    case Kind::ZExt:
    case Kind::SExt:
      if (a->is_array() || w < a->width || w > 64)
        throw mismatch("cannot extend width " + std::to_string(a->width) + " to " +
                       std::to_string(w));
      if (w == a->width)
        return a;
      n.width = uint16_t(w);
      n.b = n.c = nullptr;
      if (a->is_const())
        return constant(k == Kind::ZExt ? a->value : uint64_t(sign_extend(a->value, a->width)), w);
      break;
    case Kind::Extract:
      if (a->is_array() || w == 0 || aux + w > a->width)
        throw mismatch("bits [" + std::to_string(aux) + "," + std::to_string(aux + w) +
                       ") of width " + std::to_string(a->width));
      n.width = uint16_t(w);
      n.aux = aux;
      n.b = n.c = nullptr;
      if (a->is_const())
        return constant(a->value >> aux, w);
      if (aux == 0 && w == a->width)
        return a;
      break;
    case Kind::Concat:
      if (!b || a->is_array() || b->is_array() || a->width + b->width > 64)
        throw mismatch("concat widths");
      n.width = uint16_t(a->width + b->width);
      n.c = nullptr;
      if (all_const)
        return constant((a->value << b->width) | b->value, n.width);
      break;
    case Kind::Ite:
      if (!b || !c || a->width != 1 || b->width != c->width || b->is_array() != c->is_array())
        throw mismatch("ite operand widths");
      n.width = b->width;
      if (a->is_const())
        return a->value ? b : c;
      break;
    case Kind::Select:
      if (!b || !a->is_array() || b->width != 32)
        throw mismatch("select needs an array and a 32-bit index");
      n.width = 8;
      n.c = nullptr;
      break;
    case Kind::ArrStore:
      if (!b || !c || !a->is_array() || b->width != 32 || c->width != 8)
        throw mismatch("store needs an array, a 32-bit index and a byte");
      n.width = 0;
      break;
    default:
      throw mismatch("not an operator");
    }
  }
  if (full) {
    Rewriter rw(*this);
    if (const Node* r = rw.rewrite(k, n.width, n.a, n.b, n.c, n.aux))
      return r;
  }
  return intern(std::move(n));
}

const Node* simplify(ExprContext& ctx, const Node* e, ExprCache* cache) {
  ExprCache local;
  ExprCache& memo = cache ? *cache : local;
  // Iterative post-order; expressions from long unrollings can be deep.
  struct Item {
    const Node* n;
    bool expanded;
  };
  std::vector<Item> work{{e, false}};
  while (!work.empty()) {
    Item it = work.back();
    const Node* n = it.n;
    if (!it.expanded) {
      if (memo.memo.count(n)) {
        ++memo.hits;
        work.pop_back();
        continue;
      }
      if (n->num_children() == 0) {
        ++memo.misses;
        memo.memo.emplace(n, n);
        work.pop_back();
        continue;
      }
      work.back().expanded = true;
      for (unsigned i = 0; i < n->num_children(); ++i)
        if (!memo.memo.count(n->child(i)))
          work.push_back({n->child(i), false});
      continue;
    }
    work.pop_back();
    if (memo.memo.count(n))
      continue;
    ++memo.misses;
    const Node* ch[3] = {nullptr, nullptr, nullptr};
    for (unsigned i = 0; i < n->num_children(); ++i)
      ch[i] = memo.memo.at(n->child(i));
    const Node* r = ctx.make(n->kind, n->width, ch[0], ch[1], ch[2], n->aux, true);
    memo.memo.emplace(n, r);
  }
  return memo.memo.at(e);
}

size_t count_nodes(const std::vector<const Node*>& roots) {
  std::unordered_set<const Node*> seen;
  std::vector<const Node*> work(roots.begin(), roots.end());
  while (!work.empty()) {
    const Node* n = work.back();
    work.pop_back();
    if (!n || !seen.insert(n).second)
      continue;
    for (unsigned i = 0; i < n->num_children(); ++i)
      work.push_back(n->child(i));
  }
  return seen.size();
}

namespace {

void render(const Node* e, std::string& out, size_t budget) {
  if (out.size() > budget) {
    out += "...";
    return;
  }
  switch (e->kind) {
  case Kind::Const:
    out += std::to_string(e->width == 1 ? e->value : uint64_t(e->value));
    return;
  case Kind::Sym:
    out += e->name;
    if (e->side == Side::R)
      out += "'";
    return;
  case Kind::ArrBase:
    out += "M" + std::to_string(e->aux);
    if (e->side != Side::Shared)
      out += e->side == Side::L ? "_L" : "_R";
    return;
  default:
    break;
  }
  auto infix = [&](const char* op) {
    out += '(';
    render(e->a, out, budget);
    out += op;
    render(e->b, out, budget);
    out += ')';
  };
  switch (e->kind) {
  case Kind::Add: return infix(" + ");
  case Kind::Sub: return infix(" - ");
  case Kind::Mul: return infix(" * ");
  case Kind::And: return infix(" & ");
  case Kind::Or: return infix(" | ");
  case Kind::Xor: return infix(" ^ ");
  case Kind::Eq: return infix(" == ");
  case Kind::Ne: return infix(" != ");
  case Kind::Select:
    out += "load(";
    render(e->b, out, budget);
    out += ')';
    return;
  case Kind::Extract:
    out += "extract" + std::to_string(e->aux) + ":" + std::to_string(e->width) + "(";
    render(e->a, out, budget);
    out += ')';
    return;
  case Kind::ZExt:
  case Kind::SExt:
    render(e->a, out, budget);
    return;
  default:
    break;
  }
  out += kind_name(e->kind);
  out += '(';
  for (unsigned i = 0; i < e->num_children(); ++i) {
    if (i)
      out += ", ";
    render(e->child(i), out, budget);
  }
  out += ')';
}

} // namespace

std::string to_string(const Node* e) {
  std::string out;
  render(e, out, 400);
  return out;
}

namespace {

void check_rel(const RelExpr& a) {
  if (!a.l || !a.r)
    throw WidthMismatch("empty relational value");
  if (a.l->width != a.r->width)
    throw WidthMismatch("projection widths differ");
}

} // namespace

RelExpr mk_binop(ExprContext& ctx, Kind k, const RelExpr& a, const RelExpr& b, bool simp) {
  check_rel(a);
  check_rel(b);
  auto one = [&](const Node* x, const Node* y) {
    const Node* r = ctx.bin(k, x, y);
    return simp ? simplify(ctx, r) : r;
  };
  const Node* l = one(a.l, b.l);
  const Node* r = (a.is_shared() && b.is_shared()) ? l : one(a.r, b.r);
  return {l, r};
}

RelExpr mk_unop(ExprContext& ctx, Kind k, const RelExpr& a) {
  check_rel(a);
  const Node* l = ctx.un(k, a.l);
  return {l, a.is_shared() ? l : ctx.un(k, a.r)};
}

RelExpr mk_zext(ExprContext& ctx, const RelExpr& a, unsigned w) {
  check_rel(a);
  const Node* l = ctx.zext(a.l, w);
  return {l, a.is_shared() ? l : ctx.zext(a.r, w)};
}

RelExpr mk_sext(ExprContext& ctx, const RelExpr& a, unsigned w) {
  check_rel(a);
  const Node* l = ctx.sext(a.l, w);
  return {l, a.is_shared() ? l : ctx.sext(a.r, w)};
}

RelExpr mk_extract(ExprContext& ctx, const RelExpr& a, unsigned lo, unsigned w) {
  check_rel(a);
  const Node* l = ctx.extract(a.l, lo, w);
  return {l, a.is_shared() ? l : ctx.extract(a.r, lo, w)};
}

RelExpr mk_concat(ExprContext& ctx, const RelExpr& hi, const RelExpr& lo) {
  check_rel(hi);
  check_rel(lo);
  return {ctx.concat(hi.l, lo.l), ctx.concat(hi.r, lo.r)};
}

RelExpr mk_ite(ExprContext& ctx, const RelExpr& c, const RelExpr& t, const RelExpr& e) {
  check_rel(c);
  check_rel(t);
  check_rel(e);
  return {ctx.ite(c.l, t.l, e.l), ctx.ite(c.r, t.r, e.r)};
}

RelExpr simplify(ExprContext& ctx, const RelExpr& e, ExprCache* cache) {
  const Node* l = simplify(ctx, e.l, cache);
  return {l, e.is_shared() ? l : simplify(ctx, e.r, cache)};
}

size_t count_exprs(const RelExpr& e) { return count_nodes({e.l, e.r}); }

std::string to_string(const RelExpr& e) {
  if (e.is_shared())
    return to_string(e.l);
  return "<" + to_string(e.l) + ", " + to_string(e.r) + ">";
}

} // namespace relct

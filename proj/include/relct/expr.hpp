#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace relct {

// Node kinds. Comparisons produce width-1 bitvectors; boolean connectives
// are And/Or/Xor at width 1.
enum class Kind : uint8_t {
  Const, Sym,
  Add, Sub, Mul, DivS, DivU, RemS, RemU,
  And, Or, Xor, Shl, ShrS, ShrU, Rotl, Rotr,
  Eq, Ne, LtS, LtU, LeS, LeU, GtS, GtU, GeS, GeU,
  Clz, Ctz, Popcnt,
  ZExt, SExt, Extract, Concat,
  Ite,
  Select,   // byte read from an array term, width 8
  ArrBase,  // initial memory array of one memory generation
  ArrStore, // array with one byte overwritten
};

const char* kind_name(Kind k);
bool is_compare(Kind k);
bool is_commutative(Kind k);

// Which execution a leaf belongs to. Shared leaves are read by both.
enum class Side : uint8_t { Shared, L, R };

struct Node {
  Kind kind = Kind::Const;
  Side side = Side::Shared; // Sym, ArrBase
  uint16_t width = 0;       // bits; 0 for array terms
  uint32_t aux = 0;         // Extract: low bit; ArrBase: generation id
  uint64_t value = 0;       // Const, masked to width
  const Node* a = nullptr;
  const Node* b = nullptr;
  const Node* c = nullptr;
  std::string name; // Sym
  uint32_t id = 0;  // creation order

  bool is_const() const { return kind == Kind::Const; }
  bool is_const(uint64_t v) const { return kind == Kind::Const && value == v; }
  bool is_array() const { return kind == Kind::ArrBase || kind == Kind::ArrStore; }
  unsigned num_children() const { return c ? 3 : b ? 2 : a ? 1 : 0; }
  const Node* child(unsigned i) const { return i == 0 ? a : i == 1 ? b : c; }
};

uint64_t width_mask(unsigned w);
int64_t sign_extend(uint64_t v, unsigned w);

// Owns and hash-conses nodes. Two structurally equal nodes built from the
// same context are the same pointer.
//
// Every builder folds operations whose operands are all constants and
// nothing else. simplify() applies the full rewrite set.
class ExprContext {
public:
  ExprContext() = default;
  ExprContext(const ExprContext&) = delete;
  ExprContext& operator=(const ExprContext&) = delete;

  const Node* constant(uint64_t v, unsigned w);
  const Node* boolean(bool v) { return constant(v ? 1 : 0, 1); }
  const Node* sym(const std::string& name, Side side, unsigned w);
  const Node* array(uint32_t generation, Side side);

  const Node* bin(Kind k, const Node* a, const Node* b);
  const Node* un(Kind k, const Node* a); // Clz, Ctz, Popcnt
  const Node* zext(const Node* a, unsigned w);
  const Node* sext(const Node* a, unsigned w);
  const Node* extract(const Node* a, unsigned lo, unsigned w);
  const Node* concat(const Node* hi, const Node* lo);
  const Node* ite(const Node* c, const Node* t, const Node* e);
  const Node* select(const Node* arr, const Node* idx);
  const Node* store(const Node* arr, const Node* idx, const Node* val);

  const Node* bool_not(const Node* a) { return bin(Kind::Xor, boolean(true), a); }
  const Node* bool_and(const Node* a, const Node* b) { return bin(Kind::And, a, b); }
  const Node* bool_or(const Node* a, const Node* b) { return bin(Kind::Or, a, b); }

  // Generic entry point used by rebuilding passes. `w` is only consulted
  // for ZExt/SExt/Extract.
  const Node* make(Kind k, unsigned w, const Node* a, const Node* b, const Node* c,
                   uint32_t aux, bool full);

  size_t size() const { return nodes_.size(); }

private:
  friend class Rewriter;

  struct KeyHash {
    size_t operator()(const Node* n) const;
  };
  struct KeyEq {
    bool operator()(const Node* x, const Node* y) const;
  };

  const Node* intern(Node n);
  const Node* build(Kind k, unsigned w, const Node* a, const Node* b, const Node* c,
                    uint32_t aux, bool full);

  std::deque<Node> nodes_;
  std::unordered_set<const Node*, KeyHash, KeyEq> table_;
};

// Memo table for simplify(). Purely a cache: results never depend on
// whether an entry was present.
struct ExprCache {
  std::unordered_map<const Node*, const Node*> memo;
  uint64_t hits = 0;
  uint64_t misses = 0;
  void clear() {
    memo.clear();
    hits = misses = 0;
  }
};

// Applies the rewrite set bottom-up to a fixed point. Passing no cache
// memoises within this call only.
const Node* simplify(ExprContext& ctx, const Node* e, ExprCache* cache = nullptr);

// Distinct nodes reachable from the given roots.
size_t count_nodes(const std::vector<const Node*>& roots);

std::string to_string(const Node* e);

// Relational value: one expression per execution. Shared iff both
// projections are the same node.
struct RelExpr {
  const Node* l = nullptr;
  const Node* r = nullptr;

  static RelExpr shared(const Node* e) { return {e, e}; }
  static RelExpr pair(const Node* l, const Node* r) { return {l, r}; }
  bool is_shared() const { return l == r; }
  bool is_const() const { return l == r && l && l->is_const(); }
  unsigned width() const { return l->width; }
  bool operator==(const RelExpr&) const = default;
};

// Componentwise application. With simplify set the result is also passed
// through the rewrite set. Throws WidthMismatch.
RelExpr mk_binop(ExprContext& ctx, Kind k, const RelExpr& a, const RelExpr& b,
                 bool simplify = true);
RelExpr mk_unop(ExprContext& ctx, Kind k, const RelExpr& a);
RelExpr mk_zext(ExprContext& ctx, const RelExpr& a, unsigned w);
RelExpr mk_sext(ExprContext& ctx, const RelExpr& a, unsigned w);
RelExpr mk_extract(ExprContext& ctx, const RelExpr& a, unsigned lo, unsigned w);
RelExpr mk_concat(ExprContext& ctx, const RelExpr& hi, const RelExpr& lo);
RelExpr mk_ite(ExprContext& ctx, const RelExpr& c, const RelExpr& t, const RelExpr& e);

RelExpr simplify(ExprContext& ctx, const RelExpr& e, ExprCache* cache = nullptr);

size_t count_exprs(const RelExpr& e);

std::string to_string(const RelExpr& e);

} // namespace relct

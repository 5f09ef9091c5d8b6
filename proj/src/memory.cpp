#include "relct/memory.hpp"

#include <algorithm>

namespace relct {

namespace {

std::vector<std::pair<uint32_t, uint32_t>> secret_ranges_of(const ModuleAst& ast) {
  std::vector<std::pair<uint32_t, uint32_t>> out;
  for (const PolicyRange& r : ast.policies)
    if (r.cls == Secrecy::Secret)
      out.emplace_back(r.start, r.end);
  std::sort(out.begin(), out.end());
  return out;
}

} // namespace

std::shared_ptr<const MemBase> MemBase::from_module(ExprContext& ctx, uint32_t generation,
                                                    const ModuleAst& ast) {
  std::shared_ptr<MemBase> b(new MemBase);
  b->generation_ = generation;
  b->size_ = ast.memory ? ast.memory->size_bytes() : 0;
  b->secret_ = secret_ranges_of(ast);
  for (const DataSegment& d : ast.data)
    for (size_t i = 0; i < d.bytes.size(); ++i) {
      uint32_t a = d.offset + uint32_t(i);
      if (!b->is_secret(a))
        b->data_[a] = uint8_t(d.bytes[i]);
    }
  b->build_terms(ctx);
  return b;
}

std::shared_ptr<const MemBase> MemBase::havoc_policy(ExprContext& ctx, uint32_t generation,
                                                     const ModuleAst& ast) {
  std::shared_ptr<MemBase> b(new MemBase);
  b->generation_ = generation;
  b->size_ = ast.memory ? ast.memory->size_bytes() : 0;
  b->secret_ = secret_ranges_of(ast);
  b->build_terms(ctx);
  return b;
}

std::shared_ptr<const MemBase> MemBase::all_secret(ExprContext& ctx, uint32_t generation,
                                                   uint64_t size) {
  std::shared_ptr<MemBase> b(new MemBase);
  b->generation_ = generation;
  b->mode_ = Mode::AllSecret;
  b->size_ = size;
  b->build_terms(ctx);
  return b;
}

bool MemBase::is_secret(uint32_t addr) const {
  auto it = std::upper_bound(secret_.begin(), secret_.end(),
                             std::pair<uint32_t, uint32_t>(addr, UINT32_MAX));
  if (it == secret_.begin())
    return false;
  --it;
  return addr >= it->first && addr <= it->second;
}

std::string MemBase::secret_name(uint32_t addr) const {
  return "h_m" + std::to_string(generation_) + "_" + std::to_string(addr);
}

void MemBase::build_terms(ExprContext& ctx) {
  if (mode_ == Mode::AllSecret) {
    arr_l_ = ctx.array(generation_, Side::L);
    arr_r_ = ctx.array(generation_, Side::R);
    return;
  }
  const Node* shared = ctx.array(generation_, Side::Shared);
  for (const auto& [addr, byte] : data_)
    shared = ctx.store(shared, ctx.constant(addr, 32), ctx.constant(byte, 8));
  arr_l_ = arr_r_ = shared;
  for (const auto& [lo, hi] : secret_) {
    for (uint64_t a = lo; a <= hi; ++a) {
      const Node* idx = ctx.constant(a, 32);
      std::string name = secret_name(uint32_t(a));
      arr_l_ = ctx.store(arr_l_, idx, ctx.sym(name, Side::L, 8));
      arr_r_ = ctx.store(arr_r_, idx, ctx.sym(name, Side::R, 8));
    }
  }
}

const Node* MemBase::read(ExprContext& ctx, Side s, const Node* idx) const {
  if (!idx->is_const())
    return ctx.select(array_term(s), idx);
  uint32_t a = uint32_t(idx->value);
  if (mode_ == Mode::AllSecret)
    return ctx.select(array_term(s), idx);
  if (is_secret(a))
    return ctx.sym(secret_name(a), s, 8);
  auto it = data_.find(a);
  if (it != data_.end())
    return ctx.constant(it->second, 8);
  return ctx.select(ctx.array(generation_, Side::Shared), idx);
}

const Node* SymMemory::array_term(Side s) const {
  if (head_)
    return s == Side::R ? head_->arr_r : head_->arr_l;
  return base_->array_term(s);
}

const Node* SymMemory::read_side(ExprContext& ctx, Side s, const Node* idx) const {
  for (const Record* r = head_.get(); r; r = r->next.get()) {
    const Node* ri = s == Side::R ? r->index.r : r->index.l;
    if (ri->is_const() && idx->is_const()) {
      if (ri->value == idx->value)
        return s == Side::R ? r->value.r : r->value.l;
      continue;
    }
    return ctx.select(s == Side::R ? r->arr_r : r->arr_l, idx);
  }
  return base_->read(ctx, s, idx);
}

RelExpr SymMemory::load_byte(ExprContext& ctx, const RelExpr& index) const {
  const Node* l = read_side(ctx, Side::L, index.l);
  const Node* r = read_side(ctx, Side::R, index.r);
  return {l, r};
}

RelExpr SymMemory::load(ExprContext& ctx, const RelExpr& index, unsigned bytes, bool sign,
                        unsigned target_width) const {
  RelExpr v;
  for (unsigned i = 0; i < bytes; ++i) {
    RelExpr at = i == 0 ? index
                        : mk_binop(ctx, Kind::Add, index, RelExpr::shared(ctx.constant(i, 32)),
                                   false);
    RelExpr b = load_byte(ctx, at);
    v = i == 0 ? b : mk_concat(ctx, b, v);
  }
  return sign ? mk_sext(ctx, v, target_width) : mk_zext(ctx, v, target_width);
}

SymMemory SymMemory::store(ExprContext& ctx, const RelExpr& index, const RelExpr& value,
                           unsigned bytes) const {
  SymMemory out = *this;
  for (unsigned i = 0; i < bytes; ++i) {
    RelExpr at = i == 0 ? index
                        : mk_binop(ctx, Kind::Add, index, RelExpr::shared(ctx.constant(i, 32)),
                                   false);
    RelExpr b = mk_extract(ctx, value, 8 * i, 8);
    auto rec = std::make_shared<Record>();
    rec->index = at;
    rec->value = b;
    rec->arr_l = ctx.store(out.array_term(Side::L), at.l, b.l);
    rec->arr_r = at.is_shared() && b.is_shared() && out.array_term(Side::L) == out.array_term(Side::R)
                     ? rec->arr_l
                     : ctx.store(out.array_term(Side::R), at.r, b.r);
    rec->next = out.head_;
    out.head_ = std::move(rec);
    ++out.length_;
  }
  return out;
}

} // namespace relct

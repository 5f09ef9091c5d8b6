#pragma once

#include <map>
#include <memory>
#include <vector>

#include "relct/ast.hpp"
#include "relct/expr.hpp"

namespace relct {

// Initial contents of linear memory for one memory generation.
//
// Policy mode: bytes inside secret ranges are pairs of fresh symbols, data
// segment bytes outside them are constants, everything else is read from
// the shared unconstrained array M<g>. AllSecret mode: the two executions
// read from unrelated arrays M<g>_L and M<g>_R.
class MemBase {
public:
  enum class Mode : uint8_t { Policy, AllSecret };

  static std::shared_ptr<const MemBase> from_module(ExprContext& ctx, uint32_t generation,
                                                    const ModuleAst& ast);
  // Same secret layout as `ast`, no data: public bytes unconstrained.
  static std::shared_ptr<const MemBase> havoc_policy(ExprContext& ctx, uint32_t generation,
                                                     const ModuleAst& ast);
  static std::shared_ptr<const MemBase> all_secret(ExprContext& ctx, uint32_t generation,
                                                   uint64_t size);

  uint32_t generation() const { return generation_; }
  Mode mode() const { return mode_; }
  uint64_t size() const { return size_; }
  bool is_secret(uint32_t addr) const;
  const std::map<uint32_t, uint8_t>& data() const { return data_; }
  const std::vector<std::pair<uint32_t, uint32_t>>& secret_ranges() const { return secret_; }

  // Name of the symbol pair standing for secret byte `addr`.
  std::string secret_name(uint32_t addr) const;

  const Node* array_term(Side s) const { return s == Side::R ? arr_r_ : arr_l_; }
  const Node* read(ExprContext& ctx, Side s, const Node* idx) const;

private:
  MemBase() = default;
  void build_terms(ExprContext& ctx);

  uint32_t generation_ = 0;
  Mode mode_ = Mode::Policy;
  uint64_t size_ = 0;
  std::vector<std::pair<uint32_t, uint32_t>> secret_; // inclusive, sorted
  std::map<uint32_t, uint8_t> data_;
  const Node* arr_l_ = nullptr;
  const Node* arr_r_ = nullptr;
};

// Persistent byte-granular store chain over a MemBase. Copies share
// structure; storing never changes an existing handle.
class SymMemory {
public:
  struct Record {
    RelExpr index;
    RelExpr value; // 8-bit
    std::shared_ptr<const Record> next;
    const Node* arr_l = nullptr; // array term including this store
    const Node* arr_r = nullptr;
  };

  SymMemory() = default;
  explicit SymMemory(std::shared_ptr<const MemBase> base) : base_(std::move(base)) {}

  // Appends `bytes` little-endian byte stores of the low bytes of `value`.
  SymMemory store(ExprContext& ctx, const RelExpr& index, const RelExpr& value,
                  unsigned bytes) const;

  // Little-endian composition of `bytes` bytes, then zero or sign
  // extension to `target_width`.
  RelExpr load(ExprContext& ctx, const RelExpr& index, unsigned bytes, bool sign_extend,
               unsigned target_width) const;
  RelExpr load_byte(ExprContext& ctx, const RelExpr& index) const;

  const Node* array_term(Side s) const;
  const MemBase& base() const { return *base_; }
  const std::shared_ptr<const MemBase>& base_ptr() const { return base_; }
  const Record* head() const { return head_.get(); }
  size_t chain_length() const { return length_; }
  uint64_t size() const { return base_ ? base_->size() : 0; }

private:
  const Node* read_side(ExprContext& ctx, Side s, const Node* idx) const;

  std::shared_ptr<const MemBase> base_;
  std::shared_ptr<const Record> head_;
  size_t length_ = 0;
};

} // namespace relct

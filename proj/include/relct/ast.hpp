#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "relct/error.hpp"

namespace relct {

enum class ValType : uint8_t { I32, I64 };

inline unsigned bit_width(ValType t) { return t == ValType::I32 ? 32 : 64; }
inline std::string_view type_name(ValType t) {
  return t == ValType::I32 ? "i32" : "i64";
}

#define RELCT_OPCODES(X)                                                      \
  X(Unreachable, "unreachable")                                               \
  X(Nop, "nop")                                                               \
  X(Block, "block")                                                           \
  X(Loop, "loop")                                                             \
  X(If, "if")                                                                 \
  X(Br, "br")                                                                 \
  X(BrIf, "br_if")                                                            \
  X(BrTable, "br_table")                                                      \
  X(Return, "return")                                                         \
  X(Call, "call")                                                             \
  X(CallIndirect, "call_indirect")                                            \
  X(Drop, "drop")                                                             \
  X(Select, "select")                                                         \
  X(LocalGet, "local.get")                                                    \
  X(LocalSet, "local.set")                                                    \
  X(LocalTee, "local.tee")                                                    \
  X(GlobalGet, "global.get")                                                  \
  X(GlobalSet, "global.set")                                                  \
  X(I32Load, "i32.load")                                                      \
  X(I64Load, "i64.load")                                                      \
  X(I32Load8S, "i32.load8_s")                                                 \
  X(I32Load8U, "i32.load8_u")                                                 \
  X(I32Load16S, "i32.load16_s")                                               \
  X(I32Load16U, "i32.load16_u")                                               \
  X(I64Load8S, "i64.load8_s")                                                 \
  X(I64Load8U, "i64.load8_u")                                                 \
  X(I64Load16S, "i64.load16_s")                                               \
  X(I64Load16U, "i64.load16_u")                                               \
  X(I64Load32S, "i64.load32_s")                                               \
  X(I64Load32U, "i64.load32_u")                                               \
  X(I32Store, "i32.store")                                                    \
  X(I64Store, "i64.store")                                                    \
  X(I32Store8, "i32.store8")                                                  \
  X(I32Store16, "i32.store16")                                                \
  X(I64Store8, "i64.store8")                                                  \
  X(I64Store16, "i64.store16")                                                \
  X(I64Store32, "i64.store32")                                                \
  X(I32Const, "i32.const")                                                    \
  X(I64Const, "i64.const")                                                    \
  X(I32Eqz, "i32.eqz")                                                        \
  X(I32Eq, "i32.eq")                                                          \
  X(I32Ne, "i32.ne")                                                          \
  X(I32LtS, "i32.lt_s")                                                       \
  X(I32LtU, "i32.lt_u")                                                       \
  X(I32GtS, "i32.gt_s")                                                       \
  X(I32GtU, "i32.gt_u")                                                       \
  X(I32LeS, "i32.le_s")                                                       \
  X(I32LeU, "i32.le_u")                                                       \
  X(I32GeS, "i32.ge_s")                                                       \
  X(I32GeU, "i32.ge_u")                                                       \
  X(I64Eqz, "i64.eqz")                                                        \
  X(I64Eq, "i64.eq")                                                          \
  X(I64Ne, "i64.ne")                                                          \
  X(I64LtS, "i64.lt_s")                                                       \
  X(I64LtU, "i64.lt_u")                                                       \
  X(I64GtS, "i64.gt_s")                                                       \
  X(I64GtU, "i64.gt_u")                                                       \
  X(I64LeS, "i64.le_s")                                                       \
  X(I64LeU, "i64.le_u")                                                       \
  X(I64GeS, "i64.ge_s")                                                       \
  X(I64GeU, "i64.ge_u")                                                       \
  X(I32Clz, "i32.clz")                                                        \
  X(I32Ctz, "i32.ctz")                                                        \
  X(I32Popcnt, "i32.popcnt")                                                  \
  X(I32Add, "i32.add")                                                        \
  X(I32Sub, "i32.sub")                                                        \
  X(I32Mul, "i32.mul")                                                        \
  X(I32DivS, "i32.div_s")                                                     \
  X(I32DivU, "i32.div_u")                                                     \
  X(I32RemS, "i32.rem_s")                                                     \
  X(I32RemU, "i32.rem_u")                                                     \
  X(I32And, "i32.and")                                                        \
  X(I32Or, "i32.or")                                                          \
  X(I32Xor, "i32.xor")                                                        \
  X(I32Shl, "i32.shl")                                                        \
  X(I32ShrS, "i32.shr_s")                                                     \
  X(I32ShrU, "i32.shr_u")                                                     \
  X(I32Rotl, "i32.rotl")                                                      \
  X(I32Rotr, "i32.rotr")                                                      \
  X(I64Clz, "i64.clz")                                                        \
  X(I64Ctz, "i64.ctz")                                                        \
  X(I64Popcnt, "i64.popcnt")                                                  \
  X(I64Add, "i64.add")                                                        \
  X(I64Sub, "i64.sub")                                                        \
  X(I64Mul, "i64.mul")                                                        \
  X(I64DivS, "i64.div_s")                                                     \
  X(I64DivU, "i64.div_u")                                                     \
  X(I64RemS, "i64.rem_s")                                                     \
  X(I64RemU, "i64.rem_u")                                                     \
  X(I64And, "i64.and")                                                        \
  X(I64Or, "i64.or")                                                          \
  X(I64Xor, "i64.xor")                                                        \
  X(I64Shl, "i64.shl")                                                        \
  X(I64ShrS, "i64.shr_s")                                                     \
  X(I64ShrU, "i64.shr_u")                                                     \
  X(I64Rotl, "i64.rotl")                                                      \
  X(I64Rotr, "i64.rotr")                                                      \
  X(I32WrapI64, "i32.wrap_i64")                                               \
  X(I64ExtendI32S, "i64.extend_i32_s")                                        \
  X(I64ExtendI32U, "i64.extend_i32_u")                                        \
  X(I32Extend8S, "i32.extend8_s")                                             \
  X(I32Extend16S, "i32.extend16_s")                                           \
  X(I64Extend8S, "i64.extend8_s")                                             \
  X(I64Extend16S, "i64.extend16_s")                                           \
  X(I64Extend32S, "i64.extend32_s")

enum class Op : uint16_t {
#define RELCT_ENUM(name, text) name,
  RELCT_OPCODES(RELCT_ENUM)
#undef RELCT_ENUM
};

// Arithmetic operation carried by a numeric opcode, independent of width.
enum class Arith : uint8_t {
  None,
  Add, Sub, Mul, DivS, DivU, RemS, RemU,
  And, Or, Xor, Shl, ShrS, ShrU, Rotl, Rotr,
  Eq, Ne, LtS, LtU, GtS, GtU, LeS, LeU, GeS, GeU,
  Eqz, Clz, Ctz, Popcnt,
  Ext8S, Ext16S, Ext32S,
  Wrap, ExtendS, ExtendU,
};

enum class OpClass : uint8_t {
  Control, Parametric, Variable, Load, Store, Const,
  Unary, Binary, Compare, Convert,
};

struct OpInfo {
  std::string_view name;
  OpClass cls;
  ValType type;        // operand type (for loads/stores: value type)
  Arith arith = Arith::None;
  uint8_t bytes = 0;   // memory access width
  bool sign = false;   // sign-extending load
};

const OpInfo& op_info(Op op);
std::optional<Op> op_from_name(std::string_view name);

struct Instr {
  Op op = Op::Nop;
  // Const value, local/global/function/label/type index depending on op.
  int64_t imm = 0;
  uint32_t offset = 0;
  uint32_t align = 0; // log2 of the alignment hint
  std::vector<uint32_t> targets; // br_table; last entry is the default
  std::optional<ValType> result; // block/loop/if/select result type
  std::vector<Instr> body;
  std::vector<Instr> else_body;
  SourceLoc loc;
  uint32_t id = 0; // module-unique, assigned after parsing

  bool operator==(const Instr& o) const {
    return op == o.op && imm == o.imm && offset == o.offset &&
           align == o.align && targets == o.targets && result == o.result &&
           body == o.body && else_body == o.else_body;
  }
};

struct FuncType {
  std::vector<ValType> params;
  std::vector<ValType> results;
  bool operator==(const FuncType&) const = default;
};

struct FuncDef {
  std::string name;
  std::vector<std::string> exports;
  std::vector<ValType> params;
  std::vector<ValType> results;
  std::vector<ValType> locals;
  std::vector<Instr> body;
  SourceLoc loc;

  FuncType type() const { return {params, results}; }
  size_t num_locals() const { return params.size() + locals.size(); }
  ValType local_type(size_t i) const {
    return i < params.size() ? params[i] : locals[i - params.size()];
  }

  bool operator==(const FuncDef& o) const {
    return name == o.name && exports == o.exports && params == o.params &&
           results == o.results && locals == o.locals && body == o.body;
  }
};

struct MemoryDecl {
  uint32_t min_pages = 0;
  std::optional<uint32_t> max_pages;
  std::vector<std::string> exports;
  std::optional<std::pair<std::string, std::string>> import;
  bool operator==(const MemoryDecl&) const = default;

  uint64_t size_bytes() const { return uint64_t(min_pages) * 65536; }
};

struct GlobalDef {
  std::string name;
  ValType type = ValType::I32;
  bool mut = false;
  int64_t init = 0;
  bool operator==(const GlobalDef&) const = default;
};

enum class Secrecy : uint8_t { Public, Secret };

struct PolicyRange {
  Secrecy cls = Secrecy::Public;
  uint32_t start = 0; // inclusive
  uint32_t end = 0;   // inclusive
  SourceLoc loc;
  bool operator==(const PolicyRange& o) const {
    return cls == o.cls && start == o.start && end == o.end;
  }
};

struct DataSegment {
  uint32_t offset = 0;
  std::string bytes;
  bool operator==(const DataSegment&) const = default;
};

struct ConcreteArg {
  int64_t value = 0;
  ValType type = ValType::I32;
  bool operator==(const ConcreteArg&) const = default;
};

struct SymbolicArg {
  std::string label;
  Secrecy cls = Secrecy::Public;
  ValType type = ValType::I32;
  bool operator==(const SymbolicArg&) const = default;
};

using ArgSpec = std::variant<ConcreteArg, SymbolicArg>;

struct EntrySpec {
  std::string function_name;
  std::vector<ArgSpec> args;
  SourceLoc loc;
  bool operator==(const EntrySpec& o) const {
    return function_name == o.function_name && args == o.args;
  }
};

struct ModuleAst {
  std::vector<FuncType> types;
  std::vector<FuncDef> functions;
  std::optional<MemoryDecl> memory;
  std::vector<GlobalDef> globals;
  std::vector<PolicyRange> policies;
  std::optional<EntrySpec> entry;
  std::vector<uint32_t> table; // function indices
  std::vector<DataSegment> data;

  bool operator==(const ModuleAst&) const = default;

  std::optional<uint32_t> find_function(std::string_view name) const;
};

// Walks every instruction of a body in pre-order.
template <typename Fn> void for_each_instr(const std::vector<Instr>& body, Fn&& fn) {
  for (const Instr& in : body) {
    fn(in);
    for_each_instr(in.body, fn);
    for_each_instr(in.else_body, fn);
  }
}

} // namespace relct

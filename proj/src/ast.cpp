#include "relct/ast.hpp"

#include <array>
#include <unordered_map>

namespace relct {

namespace {

constexpr OpInfo control(std::string_view n) { return {n, OpClass::Control, ValType::I32}; }

OpInfo make_info(Op op) {
  using enum Op;
  using T = ValType;
  auto load = [](std::string_view n, T t, uint8_t bytes, bool sign) {
    return OpInfo{n, OpClass::Load, t, Arith::None, bytes, sign};
  };
  auto store = [](std::string_view n, T t, uint8_t bytes) {
    return OpInfo{n, OpClass::Store, t, Arith::None, bytes, false};
  };
  auto bin = [](std::string_view n, T t, Arith a) {
    return OpInfo{n, OpClass::Binary, t, a};
  };
  auto cmp = [](std::string_view n, T t, Arith a) {
    return OpInfo{n, OpClass::Compare, t, a};
  };
  auto un = [](std::string_view n, T t, Arith a) {
    return OpInfo{n, OpClass::Unary, t, a};
  };
  switch (op) {
  case Unreachable: return control("unreachable");
  case Nop: return control("nop");
  case Block: return control("block");
  case Loop: return control("loop");
  case If: return control("if");
  case Br: return control("br");
  case BrIf: return control("br_if");
  case BrTable: return control("br_table");
  case Return: return control("return");
  case Call: return control("call");
  case CallIndirect: return control("call_indirect");
  case Drop: return {"drop", OpClass::Parametric, T::I32};
  case Select: return {"select", OpClass::Parametric, T::I32};
  case LocalGet: return {"local.get", OpClass::Variable, T::I32};
  case LocalSet: return {"local.set", OpClass::Variable, T::I32};
  case LocalTee: return {"local.tee", OpClass::Variable, T::I32};
  case GlobalGet: return {"global.get", OpClass::Variable, T::I32};
  case GlobalSet: return {"global.set", OpClass::Variable, T::I32};
  case I32Load: return load("i32.load", T::I32, 4, false);
  case I64Load: return load("i64.load", T::I64, 8, false);
  case I32Load8S: return load("i32.load8_s", T::I32, 1, true);
  case I32Load8U: return load("i32.load8_u", T::I32, 1, false);
  case I32Load16S: return load("i32.load16_s", T::I32, 2, true);
  case I32Load16U: return load("i32.load16_u", T::I32, 2, false);
  case I64Load8S: return load("i64.load8_s", T::I64, 1, true);
  case I64Load8U: return load("i64.load8_u", T::I64, 1, false);
  case I64Load16S: return load("i64.load16_s", T::I64, 2, true);
  case I64Load16U: return load("i64.load16_u", T::I64, 2, false);
  case I64Load32S: return load("i64.load32_s", T::I64, 4, true);
  case I64Load32U: return load("i64.load32_u", T::I64, 4, false);
  case I32Store: return store("i32.store", T::I32, 4);
  case I64Store: return store("i64.store", T::I64, 8);
  case I32Store8: return store("i32.store8", T::I32, 1);
  case I32Store16: return store("i32.store16", T::I32, 2);
  case I64Store8: return store("i64.store8", T::I64, 1);
  case I64Store16: return store("i64.store16", T::I64, 2);
  case I64Store32: return store("i64.store32", T::I64, 4);
  case I32Const: return {"i32.const", OpClass::Const, T::I32};
  case I64Const: return {"i64.const", OpClass::Const, T::I64};
  case I32Eqz: return {"i32.eqz", OpClass::Compare, T::I32, Arith::Eqz};
  case I32Eq: return cmp("i32.eq", T::I32, Arith::Eq);
  case I32Ne: return cmp("i32.ne", T::I32, Arith::Ne);
  case I32LtS: return cmp("i32.lt_s", T::I32, Arith::LtS);
  case I32LtU: return cmp("i32.lt_u", T::I32, Arith::LtU);
  case I32GtS: return cmp("i32.gt_s", T::I32, Arith::GtS);
  case I32GtU: return cmp("i32.gt_u", T::I32, Arith::GtU);
  case I32LeS: return cmp("i32.le_s", T::I32, Arith::LeS);
  case I32LeU: return cmp("i32.le_u", T::I32, Arith::LeU);
  case I32GeS: return cmp("i32.ge_s", T::I32, Arith::GeS);
  case I32GeU: return cmp("i32.ge_u", T::I32, Arith::GeU);
  case I64Eqz: return {"i64.eqz", OpClass::Compare, T::I64, Arith::Eqz};
  case I64Eq: return cmp("i64.eq", T::I64, Arith::Eq);
  case I64Ne: return cmp("i64.ne", T::I64, Arith::Ne);
  case I64LtS: return cmp("i64.lt_s", T::I64, Arith::LtS);
  case I64LtU: return cmp("i64.lt_u", T::I64, Arith::LtU);
  case I64GtS: return cmp("i64.gt_s", T::I64, Arith::GtS);
  case I64GtU: return cmp("i64.gt_u", T::I64, Arith::GtU);
  case I64LeS: return cmp("i64.le_s", T::I64, Arith::LeS);
  case I64LeU: return cmp("i64.le_u", T::I64, Arith::LeU);
  case I64GeS: return cmp("i64.ge_s", T::I64, Arith::GeS);
  case I64GeU: return cmp("i64.ge_u", T::I64, Arith::GeU);
  case I32Clz: return un("i32.clz", T::I32, Arith::Clz);
  case I32Ctz: return un("i32.ctz", T::I32, Arith::Ctz);
  case I32Popcnt: return un("i32.popcnt", T::I32, Arith::Popcnt);
  case I32Add: return bin("i32.add", T::I32, Arith::Add);
  case I32Sub: return bin("i32.sub", T::I32, Arith::Sub);
  case I32Mul: return bin("i32.mul", T::I32, Arith::Mul);
  case I32DivS: return bin("i32.div_s", T::I32, Arith::DivS);
  case I32DivU: return bin("i32.div_u", T::I32, Arith::DivU);
  case I32RemS: return bin("i32.rem_s", T::I32, Arith::RemS);
  case I32RemU: return bin("i32.rem_u", T::I32, Arith::RemU);
  case I32And: return bin("i32.and", T::I32, Arith::And);
  case I32Or: return bin("i32.or", T::I32, Arith::Or);
  case I32Xor: return bin("i32.xor", T::I32, Arith::Xor);
  case I32Shl: return bin("i32.shl", T::I32, Arith::Shl);
  case I32ShrS: return bin("i32.shr_s", T::I32, Arith::ShrS);
  case I32ShrU: return bin("i32.shr_u", T::I32, Arith::ShrU);
  case I32Rotl: return bin("i32.rotl", T::I32, Arith::Rotl);
  case I32Rotr: return bin("i32.rotr", T::I32, Arith::Rotr);
  case I64Clz: return un("i64.clz", T::I64, Arith::Clz);
  case I64Ctz: return un("i64.ctz", T::I64, Arith::Ctz);
  case I64Popcnt: return un("i64.popcnt", T::I64, Arith::Popcnt);
  case I64Add: return bin("i64.add", T::I64, Arith::Add);
  case I64Sub: return bin("i64.sub", T::I64, Arith::Sub);
  case I64Mul: return bin("i64.mul", T::I64, Arith::Mul);
  case I64DivS: return bin("i64.div_s", T::I64, Arith::DivS);
  case I64DivU: return bin("i64.div_u", T::I64, Arith::DivU);
  case I64RemS: return bin("i64.rem_s", T::I64, Arith::RemS);
  case I64RemU: return bin("i64.rem_u", T::I64, Arith::RemU);
  case I64And: return bin("i64.and", T::I64, Arith::And);
  case I64Or: return bin("i64.or", T::I64, Arith::Or);
  case I64Xor: return bin("i64.xor", T::I64, Arith::Xor);
  case I64Shl: return bin("i64.shl", T::I64, Arith::Shl);
  case I64ShrS: return bin("i64.shr_s", T::I64, Arith::ShrS);
  case I64ShrU: return bin("i64.shr_u", T::I64, Arith::ShrU);
  case I64Rotl: return bin("i64.rotl", T::I64, Arith::Rotl);
  case I64Rotr: return bin("i64.rotr", T::I64, Arith::Rotr);
  case I32WrapI64: return {"i32.wrap_i64", OpClass::Convert, T::I64, Arith::Wrap};
  case I64ExtendI32S: return {"i64.extend_i32_s", OpClass::Convert, T::I32, Arith::ExtendS};
  case I64ExtendI32U: return {"i64.extend_i32_u", OpClass::Convert, T::I32, Arith::ExtendU};
  case I32Extend8S: return un("i32.extend8_s", T::I32, Arith::Ext8S);
  case I32Extend16S: return un("i32.extend16_s", T::I32, Arith::Ext16S);
  case I64Extend8S: return un("i64.extend8_s", T::I64, Arith::Ext8S);
  case I64Extend16S: return un("i64.extend16_s", T::I64, Arith::Ext16S);
  case I64Extend32S: return un("i64.extend32_s", T::I64, Arith::Ext32S);
  }
  return control("?");
}

constexpr size_t kNumOps = 0
#define RELCT_COUNT(name, text) +1
    RELCT_OPCODES(RELCT_COUNT)
#undef RELCT_COUNT
    ;

const std::array<OpInfo, kNumOps>& info_table() {
  static const auto table = [] {
    std::array<OpInfo, kNumOps> t{};
    for (size_t i = 0; i < kNumOps; ++i)
      t[i] = make_info(static_cast<Op>(i));
    return t;
  }();
  return table;
}

} // namespace

const OpInfo& op_info(Op op) { return info_table()[static_cast<size_t>(op)]; }

std::optional<Op> op_from_name(std::string_view name) {
  static const auto names = [] {
    std::unordered_map<std::string_view, Op> m;
    for (size_t i = 0; i < kNumOps; ++i)
      m.emplace(info_table()[i].name, static_cast<Op>(i));
    // Pre-1.0 spellings still emitted by older toolchains.
    m.emplace("get_local", Op::LocalGet);
    m.emplace("set_local", Op::LocalSet);
    m.emplace("tee_local", Op::LocalTee);
    m.emplace("get_global", Op::GlobalGet);
    m.emplace("set_global", Op::GlobalSet);
    m.emplace("i32.wrap/i64", Op::I32WrapI64);
    m.emplace("i64.extend_s/i32", Op::I64ExtendI32S);
    m.emplace("i64.extend_u/i32", Op::I64ExtendI32U);
    return m;
  }();
  auto it = names.find(name);
  if (it == names.end())
    return std::nullopt;
  return it->second;
}

std::optional<uint32_t> ModuleAst::find_function(std::string_view name) const {
  for (uint32_t i = 0; i < functions.size(); ++i) {
    const FuncDef& f = functions[i];
    if (f.name == name)
      return i;
    for (const auto& e : f.exports)
      if (e == name)
        return i;
  }
  return std::nullopt;
}

} // namespace relct

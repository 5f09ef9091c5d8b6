#pragma once

// Loop-free micro-programs over at most two secret bytes (addresses 0, 1)
// and one public byte (address 2). Bytes 16..47 hold known data; loads
// and stores stay inside that window. The IR renders to flat WAT with one
// instruction per line, and has its own direct evaluator.

#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace programs {

enum class E : uint8_t { Const, Local, Secret0, Secret1, Public, Load, Bin, Select };
enum class S : uint8_t { Set, If, Store, BrIf };

struct Expr {
  E kind = E::Const;
  uint32_t value = 0; // Const value, Local index, Bin operator
  std::vector<Expr> args;
};

struct Stmt {
  S kind = S::Set;
  uint32_t local = 0;
  Expr a, b;                    // Set: a; If/BrIf: a cond; Store: a addr, b value
  std::vector<Stmt> then_, else_; // BrIf: then_ is the guarded block tail
  uint32_t site = 0;              // If/BrIf/Store and every Load
};

inline const char* kBinOps[] = {"i32.add", "i32.sub",  "i32.mul",  "i32.and",
                                "i32.or",  "i32.xor",  "i32.shl",  "i32.shr_u",
                                "i32.eq",  "i32.lt_u", "i32.ne",   "i32.gt_s"};
constexpr uint32_t kNumBinOps = 12;
constexpr uint32_t kLocals = 3;
constexpr uint32_t kWindow = 16;

inline uint32_t bin(uint32_t op, uint32_t x, uint32_t y) {
  switch (op) {
  case 0: return x + y;
  case 1: return x - y;
  case 2: return x * y;
  case 3: return x & y;
  case 4: return x | y;
  case 5: return x ^ y;
  case 6: return x << (y & 31);
  case 7: return x >> (y & 31);
  case 8: return x == y;
  case 9: return x < y;
  case 10: return x != y;
  default: return int32_t(x) > int32_t(y);
  }
}

struct Program {
  std::vector<Stmt> body;
  bool uses_secret1 = false;
  bool uses_public = false;
  uint32_t sites = 0;
  std::map<uint32_t, uint32_t> site_line; // filled by render()
  std::map<uint32_t, std::string> site_op;
};

class Generator {
public:
  explicit Generator(uint32_t seed, bool two_secrets) : rng_(seed), two_(two_secrets) {}

  Program make() {
    Program p;
    p_ = &p;
    p.body = block(3 + pick(4), 2);
    return p;
  }

private:
  uint32_t pick(uint32_t n) { return std::uniform_int_distribution<uint32_t>(0, n - 1)(rng_); }

  Expr leaf() {
    Expr e;
    switch (pick(5)) {
    case 0:
      e.kind = E::Const;
      e.value = pick(3) == 0 ? pick(256) : pick(4);
      break;
    case 1:
      e.kind = E::Local;
      e.value = pick(kLocals);
      break;
    case 2: e.kind = E::Secret0; break;
    default:
      if (two_) {
        e.kind = E::Secret1;
        p_->uses_secret1 = true;
      } else {
        e.kind = E::Public;
        p_->uses_public = true;
      }
      break;
    }
    return e;
  }

  Expr expr(int depth) {
    if (depth == 0 || pick(3) == 0)
      return leaf();
    Expr e;
    switch (pick(6)) {
    case 0:
      e.kind = E::Load;
      e.value = p_->sites++;
      e.args.push_back(expr(depth - 1));
      break;
    case 1:
      e.kind = E::Select;
      e.args = {expr(depth - 1), expr(depth - 1), expr(depth - 1)};
      break;
    default:
      e.kind = E::Bin;
      e.value = pick(kNumBinOps);
      e.args = {expr(depth - 1), expr(depth - 1)};
      break;
    }
    return e;
  }

  std::vector<Stmt> block(uint32_t n, int depth) {
    std::vector<Stmt> out;
    for (uint32_t i = 0; i < n; ++i) {
      Stmt s;
      uint32_t k = depth > 0 ? pick(6) : pick(3);
      if (k <= 1) {
        s.kind = S::Set;
        s.local = pick(kLocals);
        s.a = expr(2);
      } else if (k == 2) {
        s.kind = S::Store;
        s.site = p_->sites++;
        s.a = expr(2);
        s.b = expr(1);
      } else if (k <= 4) {
        s.kind = S::If;
        s.site = p_->sites++;
        s.a = expr(2);
        s.then_ = block(1 + pick(2), depth - 1);
        if (pick(2))
          s.else_ = block(1 + pick(2), depth - 1);
      } else {
        s.kind = S::BrIf;
        s.site = p_->sites++;
        s.a = expr(2);
        s.then_ = block(1 + pick(2), depth - 1);
      }
      out.push_back(std::move(s));
    }
    return out;
  }

  std::mt19937 rng_;
  bool two_;
  Program* p_ = nullptr;
};

// Flat-form WAT. Load/store addresses are 16 + (e & 15).
class Renderer {
public:
  explicit Renderer(Program& p) : p_(p) {}

  std::string render() {
    line("(module");
    line("  (memory 1)");
    std::string data;
    for (uint32_t i = 0; i < 32; ++i) {
      static const char* hex = "0123456789abcdef";
      uint8_t b = data_byte(kWindow + i);
      data += std::string("\\") + hex[b >> 4] + hex[b & 15];
    }
    line("  (data (i32.const 16) \"" + data + "\")");
    line("  (func $f (result i32) (local i32 i32 i32)");
    for (const Stmt& s : p_.body)
      stmt(s);
    line("    local.get 0");
    line("  ))");
    line("(secret (i32.const 0) (i32.const 1))");
    line("(public (i32.const 2) (i32.const 2))");
    line("(symb_exec \"f\")");
    return out_;
  }

  static uint8_t data_byte(uint32_t addr) { return uint8_t(addr * 37 + 11); }

private:
  void line(const std::string& s) {
    out_ += s + "\n";
    ++lines_;
  }
  void ins(const std::string& s) { line("    " + s); }
  void site(uint32_t id, const std::string& op) {
    p_.site_line[id] = lines_ + 1;
    p_.site_op[id] = op;
    ins(op);
  }

  void expr(const Expr& e) {
    switch (e.kind) {
    case E::Const: ins("i32.const " + std::to_string(e.value)); break;
    case E::Local: ins("local.get " + std::to_string(e.value)); break;
    case E::Secret0: ins("i32.const 0"), ins("i32.load8_u"); break;
    case E::Secret1: ins("i32.const 1"), ins("i32.load8_u"); break;
    case E::Public: ins("i32.const 2"), ins("i32.load8_u"); break;
    case E::Load:
      address(e.args[0]);
      site(e.value, "i32.load8_u");
      break;
    case E::Bin:
      expr(e.args[0]);
      expr(e.args[1]);
      ins(kBinOps[e.value]);
      break;
    case E::Select:
      expr(e.args[0]);
      expr(e.args[1]);
      expr(e.args[2]);
      ins("select");
      break;
    }
  }

  void address(const Expr& e) {
    expr(e);
    ins("i32.const 15");
    ins("i32.and");
    ins("i32.const 16");
    ins("i32.add");
  }

  void stmt(const Stmt& s) {
    switch (s.kind) {
    case S::Set:
      expr(s.a);
      ins("local.set " + std::to_string(s.local));
      break;
    case S::Store:
      address(s.a);
      expr(s.b);
      site(s.site, "i32.store8");
      break;
    case S::If:
      expr(s.a);
      site(s.site, "if");
      for (const Stmt& t : s.then_)
        stmt(t);
      if (!s.else_.empty()) {
        ins("else");
        for (const Stmt& t : s.else_)
          stmt(t);
      }
      ins("end");
      break;
    case S::BrIf:
      ins("block");
      expr(s.a);
      site(s.site, "br_if 0");
      for (const Stmt& t : s.then_)
        stmt(t);
      ins("end");
      break;
    }
  }

  Program& p_;
  std::string out_;
  uint32_t lines_ = 0;
};

// One observation per reached site: branch outcome or effective address.
struct Observation {
  uint32_t site;
  uint32_t value;
  bool operator==(const Observation&) const = default;
};

class Evaluator {
public:
  Evaluator(const Program& p, uint8_t s0, uint8_t s1, uint8_t pub) : p_(p) {
    mem_[0] = s0;
    mem_[1] = s1;
    mem_[2] = pub;
    for (uint32_t i = 0; i < 32; ++i)
      mem_[kWindow + i] = Renderer::data_byte(kWindow + i);
  }

  std::vector<Observation> run() {
    exec(p_.body);
    return std::move(trace_);
  }

private:
  struct Skip {};

  uint32_t addr(const Expr& e) { return kWindow + (eval(e) & 15); }

  uint32_t eval(const Expr& e) {
    switch (e.kind) {
    case E::Const: return e.value;
    case E::Local: return locals_[e.value];
    case E::Secret0: return mem_[0];
    case E::Secret1: return mem_[1];
    case E::Public: return mem_[2];
    case E::Load: {
      uint32_t a = addr(e.args[0]);
      trace_.push_back({e.value, a});
      return mem_[a];
    }
    case E::Bin: {
      uint32_t x = eval(e.args[0]);
      uint32_t y = eval(e.args[1]);
      return bin(e.value, x, y);
    }
    case E::Select: {
      uint32_t x = eval(e.args[0]);
      uint32_t y = eval(e.args[1]);
      uint32_t c = eval(e.args[2]);
      return c ? x : y;
    }
    }
    return 0;
  }

  void exec(const std::vector<Stmt>& body) {
    for (const Stmt& s : body) {
      switch (s.kind) {
      case S::Set: locals_[s.local] = eval(s.a); break;
      case S::Store: {
        uint32_t a = addr(s.a);
        uint32_t v = eval(s.b);
        trace_.push_back({s.site, a});
        mem_[a] = uint8_t(v);
        break;
      }
      case S::If: {
        bool c = eval(s.a) != 0;
        trace_.push_back({s.site, c});
        exec(c ? s.then_ : s.else_);
        break;
      }
      case S::BrIf: {
        bool c = eval(s.a) != 0;
        trace_.push_back({s.site, c});
        if (!c)
          exec(s.then_);
        break;
      }
      }
    }
  }

  const Program& p_;
  uint8_t mem_[64] = {};
  uint32_t locals_[kLocals] = {};
  std::vector<Observation> trace_;
};

// Sites where two executions agreeing on the public byte and on every
// earlier observation disagree at that site.
inline std::set<uint32_t> leaking_sites(const Program& p) {
  std::set<uint32_t> leaks;
  const uint32_t pubs = p.uses_public ? 256 : 1;
  const uint32_t s1s = p.uses_secret1 ? 256 : 1;
  for (uint32_t pub = 0; pub < pubs; ++pub) {
    // prefix key -> observation seen there
    std::map<std::vector<uint32_t>, uint32_t> seen;
    for (uint32_t s0 = 0; s0 < 256; ++s0)
      for (uint32_t s1 = 0; s1 < s1s; ++s1) {
        std::vector<Observation> t = Evaluator(p, uint8_t(s0), uint8_t(s1), uint8_t(pub)).run();
        std::vector<uint32_t> key;
        for (const Observation& o : t) {
          key.push_back(o.site);
          auto [it, fresh] = seen.try_emplace(key, o.value);
          if (!fresh && it->second != o.value)
            leaks.insert(o.site);
          key.push_back(o.value);
        }
      }
  }
  return leaks;
}

} // namespace programs

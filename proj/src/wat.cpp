#include "relct/wat.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_map>

namespace relct::wat {

namespace {

// ---------------------------------------------------------------------------
// S-expressions

struct SExpr {
  enum class Kind : uint8_t { List, Atom, String };
  Kind kind = Kind::Atom;
  std::string text; // atom text or decoded string bytes
  std::vector<SExpr> items;
  SourceLoc loc;

  bool is_list() const { return kind == Kind::List; }
  bool is_atom() const { return kind == Kind::Atom; }
  bool is_string() const { return kind == Kind::String; }
  bool is_atom(std::string_view s) const { return is_atom() && text == s; }
  bool is_id() const { return is_atom() && !text.empty() && text[0] == '$'; }
  // List whose first element is the keyword `kw`.
  bool is_form(std::string_view kw) const {
    return is_list() && !items.empty() && items[0].is_atom(kw);
  }
  std::string_view head() const {
    if (is_list() && !items.empty() && items[0].is_atom())
      return items[0].text;
    return {};
  }
};

class Lexer {
public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<SExpr> parse_all() {
    std::vector<SExpr> out;
    for (;;) {
      skip_space();
      if (pos_ >= src_.size())
        return out;
      out.push_back(parse_one());
    }
  }

private:
  std::string_view src_;
  size_t pos_ = 0;
  uint32_t line_ = 1;
  uint32_t col_ = 1;

  SourceLoc here() const { return {line_, col_}; }

  char peek(size_t k = 0) const {
    return pos_ + k < src_.size() ? src_[pos_ + k] : '\0';
  }

  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_space() {
    for (;;) {
      if (pos_ >= src_.size())
        return;
      char c = peek();
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        advance();
      } else if (c == ';' && peek(1) == ';') {
        while (pos_ < src_.size() && peek() != '\n')
          advance();
      } else if (c == '(' && peek(1) == ';') {
        SourceLoc start = here();
        int depth = 0;
        do {
          if (pos_ >= src_.size())
            throw SyntaxError(start, "unterminated block comment");
          if (peek() == '(' && peek(1) == ';') {
            ++depth;
            advance();
            advance();
          } else if (peek() == ';' && peek(1) == ')') {
            --depth;
            advance();
            advance();
          } else {
            advance();
          }
        } while (depth > 0);
      } else {
        return;
      }
    }
  }

  SExpr parse_one() {
    SExpr e;
    e.loc = here();
    char c = peek();
    if (c == '(') {
      advance();
      e.kind = SExpr::Kind::List;
      for (;;) {
        skip_space();
        if (pos_ >= src_.size())
          throw SyntaxError(e.loc, "unbalanced parenthesis");
        if (peek() == ')') {
          advance();
          return e;
        }
        e.items.push_back(parse_one());
      }
    }
    if (c == ')')
      throw SyntaxError(e.loc, "unexpected ')'");
    if (c == '"') {
      e.kind = SExpr::Kind::String;
      e.text = parse_string();
      return e;
    }
    e.kind = SExpr::Kind::Atom;
    while (pos_ < src_.size()) {
      c = peek();
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '(' ||
          c == ')' || c == '"' || (c == ';' && peek(1) == ';'))
        break;
      e.text.push_back(c);
      advance();
    }
    return e;
  }

  static int hex_digit(char c) {
    if (c >= '0' && c <= '9')
      return c - '0';
    if (c >= 'a' && c <= 'f')
      return c - 'a' + 10;
    if (c >= 'A' && c <= 'F')
      return c - 'A' + 10;
    return -1;
  }

  std::string parse_string() {
    SourceLoc start = here();
    advance(); // opening quote
    std::string out;
    for (;;) {
      if (pos_ >= src_.size())
        throw SyntaxError(start, "unterminated string");
      char c = peek();
      if (c == '"') {
        advance();
        return out;
      }
      if (c != '\\') {
        out.push_back(c);
        advance();
        continue;
      }
      SourceLoc esc = here();
      advance();
      char d = peek();
      switch (d) {
      case 'n': out.push_back('\n'); advance(); break;
      case 't': out.push_back('\t'); advance(); break;
      case 'r': out.push_back('\r'); advance(); break;
      case '"': out.push_back('"'); advance(); break;
      case '\'': out.push_back('\''); advance(); break;
      case '\\': out.push_back('\\'); advance(); break;
      case 'u': {
        advance();
        if (peek() != '{')
          throw SyntaxError(esc, "malformed unicode escape");
        advance();
        uint32_t cp = 0;
        while (peek() != '}') {
          int h = hex_digit(peek());
          if (h < 0)
            throw SyntaxError(esc, "malformed unicode escape");
          cp = cp * 16 + uint32_t(h);
          advance();
        }
        advance();
        encode_utf8(cp, out);
        break;
      }
      default: {
        int hi = hex_digit(d);
        int lo = hex_digit(peek(1));
        if (hi < 0 || lo < 0)
          throw SyntaxError(esc, "malformed escape sequence");
        out.push_back(static_cast<char>(hi * 16 + lo));
        advance();
        advance();
      }
      }
    }
  }

  static void encode_utf8(uint32_t cp, std::string& out) {
    if (cp < 0x80) {
      out.push_back(char(cp));
    } else if (cp < 0x800) {
      out.push_back(char(0xC0 | (cp >> 6)));
      out.push_back(char(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(char(0xE0 | (cp >> 12)));
      out.push_back(char(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(char(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(char(0xF0 | (cp >> 18)));
      out.push_back(char(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(char(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(char(0x80 | (cp & 0x3F)));
    }
  }
};

// ---------------------------------------------------------------------------
// Literals

bool looks_numeric(std::string_view s) {
  if (s.empty())
    return false;
  size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  return i < s.size() && s[i] >= '0' && s[i] <= '9';
}

std::optional<uint64_t> parse_magnitude(std::string_view s) {
  std::string digits;
  int base = 10;
  if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
    base = 16;
    s.remove_prefix(2);
  }
  for (char c : s)
    if (c != '_')
      digits.push_back(c);
  if (digits.empty())
    return std::nullopt;
  uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v, base);
  if (ec != std::errc() || ptr != digits.data() + digits.size())
    return std::nullopt;
  return v;
}

// Integer literal of the given width; the result is sign-normalised so that
// `i32.const -1` and `i32.const 0xffffffff` compare equal.
int64_t parse_int(const SExpr& e, ValType t) {
  if (!e.is_atom() || !looks_numeric(e.text))
    throw SyntaxError(e.loc, "expected integer literal, got '" + e.text + "'");
  std::string_view s = e.text;
  bool neg = false;
  if (s[0] == '-' || s[0] == '+') {
    neg = s[0] == '-';
    s.remove_prefix(1);
  }
  auto mag = parse_magnitude(s);
  if (!mag)
    throw SyntaxError(e.loc, "malformed integer literal '" + e.text + "'");
  if (t == ValType::I32) {
    if (neg ? *mag > 0x80000000ull : *mag > 0xFFFFFFFFull)
      throw SyntaxError(e.loc, "i32 constant out of range");
    uint32_t bits = neg ? uint32_t(0) - uint32_t(*mag) : uint32_t(*mag);
    return int32_t(bits);
  }
  if (neg && *mag > 0x8000000000000000ull)
    throw SyntaxError(e.loc, "i64 constant out of range");
  uint64_t bits = neg ? uint64_t(0) - *mag : *mag;
  return int64_t(bits);
}

uint32_t parse_u32(const SExpr& e) {
  if (!e.is_atom() || !looks_numeric(e.text) || e.text[0] == '-' || e.text[0] == '+')
    throw SyntaxError(e.loc, "expected unsigned integer, got '" + e.text + "'");
  auto v = parse_magnitude(e.text);
  if (!v || *v > 0xFFFFFFFFull)
    throw SyntaxError(e.loc, "malformed unsigned integer '" + e.text + "'");
  return uint32_t(*v);
}

ValType parse_valtype(const SExpr& e) {
  if (e.is_atom("i32"))
    return ValType::I32;
  if (e.is_atom("i64"))
    return ValType::I64;
  if (e.is_atom("f32") || e.is_atom("f64"))
    throw SyntaxError(e.loc, "floating-point types are not supported");
  throw SyntaxError(e.loc, "expected value type, got '" + e.text + "'");
}

// `(i32.const N)` used by policies, data and element offsets.
uint32_t parse_const_address(const SExpr& e) {
  if (!e.is_form("i32.const") || e.items.size() != 2)
    throw SyntaxError(e.loc, "expected (i32.const N)");
  return uint32_t(parse_int(e.items[1], ValType::I32));
}

std::string strip_dollar(std::string_view s) {
  if (!s.empty() && s[0] == '$')
    s.remove_prefix(1);
  return std::string(s);
}

constexpr uint32_t kNullFunc = std::numeric_limits<uint32_t>::max();

// ---------------------------------------------------------------------------
// Module parsing

struct MemoryCandidate {
  MemoryDecl decl;
  std::string module_id;
  SourceLoc loc;
};

struct ModuleCtx {
  std::string id;
  uint32_t func_base = 0;
  uint32_t global_base = 0;
  uint32_t type_base = 0;
  std::unordered_map<std::string, uint32_t> func_names;
  std::unordered_map<std::string, uint32_t> global_names;
  std::unordered_map<std::string, uint32_t> type_names;
  std::optional<std::string> table_name;
  bool has_table = false;
  uint32_t num_funcs = 0;
  uint32_t num_globals = 0;
  uint32_t num_types = 0;
};

class Parser {
public:
  ModuleAst ast;

  void add_source(std::string_view text) {
    for (const SExpr& top : Lexer(text).parse_all()) {
      if (top.is_form("module"))
        parse_module_form(top);
      else if (!parse_annotation(top))
        throw SyntaxError(top.loc, "unexpected top-level form");
    }
  }

  ModuleAst finish() {
    link_memory();
    number_instructions(ast);
    validate(ast);
    return std::move(ast);
  }

private:
  std::vector<MemoryCandidate> memory_defs_;
  std::vector<MemoryCandidate> memory_imports_;
  bool table_seen_ = false;
  SourceLoc entry_loc_;

  // -- annotations ----------------------------------------------------------

  bool parse_annotation(const SExpr& e) {
    if (e.is_form("public") || e.is_form("secret")) {
      if (e.items.size() != 3)
        throw SyntaxError(e.loc, "policy range needs (i32.const start) (i32.const end)");
      PolicyRange r;
      r.cls = e.is_form("secret") ? Secrecy::Secret : Secrecy::Public;
      r.start = parse_const_address(e.items[1]);
      r.end = parse_const_address(e.items[2]);
      r.loc = e.loc;
      if (r.start > r.end)
        throw PolicyError(e.loc, "policy range start " + std::to_string(r.start) +
                                     " exceeds end " + std::to_string(r.end));
      ast.policies.push_back(r);
      return true;
    }
    if (e.is_form("symb_exec")) {
      if (ast.entry)
        throw SyntaxError(e.loc, "duplicate symb_exec directive");
      if (e.items.size() < 2 || !e.items[1].is_string())
        throw SyntaxError(e.loc, "symb_exec needs a function name string");
      EntrySpec spec;
      spec.function_name = e.items[1].text;
      spec.loc = e.loc;
      for (size_t i = 2; i < e.items.size(); ++i)
        spec.args.push_back(parse_entry_arg(e.items[i]));
      ast.entry = std::move(spec);
      return true;
    }
    return false;
  }

  ArgSpec parse_entry_arg(const SExpr& e) {
    ValType t;
    if (e.is_form("i32.sconst"))
      t = ValType::I32;
    else if (e.is_form("i64.sconst"))
      t = ValType::I64;
    else
      throw SyntaxError(e.loc, "entry argument must be (i32.sconst ...) or (i64.sconst ...)");
    if (e.items.size() != 2 || !e.items[1].is_atom())
      throw SyntaxError(e.loc, "malformed entry argument");
    const SExpr& v = e.items[1];
    if (looks_numeric(v.text))
      return ConcreteArg{parse_int(v, t), t};
    std::string label = strip_dollar(v.text);
    Secrecy cls = classify_label(label, v.loc);
    return SymbolicArg{label, cls, t};
  }

  // -- modules ----------------------------------------------------------------

  void parse_module_form(const SExpr& mod) {
    ModuleCtx ctx;
    size_t first = 1;
    if (mod.items.size() > 1 && mod.items[1].is_id()) {
      ctx.id = strip_dollar(mod.items[1].text);
      first = 2;
    }
    ctx.func_base = uint32_t(ast.functions.size());
    ctx.global_base = uint32_t(ast.globals.size());
    ctx.type_base = uint32_t(ast.types.size());

    // Pass 1: index spaces and names.
    for (size_t i = first; i < mod.items.size(); ++i) {
      const SExpr& f = mod.items[i];
      std::string_view h = f.head();
      if (h == "func") {
        if (f.items.size() > 1 && f.items[1].is_id())
          ctx.func_names.emplace(f.items[1].text, ctx.func_base + ctx.num_funcs);
        for (const SExpr& sub : f.items)
          if (sub.is_form("import"))
            throw ValidationError(sub.loc, "function imports are not supported");
        ++ctx.num_funcs;
      } else if (h == "global") {
        if (f.items.size() > 1 && f.items[1].is_id())
          ctx.global_names.emplace(f.items[1].text, ctx.global_base + ctx.num_globals);
        ++ctx.num_globals;
      } else if (h == "type") {
        if (f.items.size() > 1 && f.items[1].is_id())
          ctx.type_names.emplace(f.items[1].text, ctx.type_base + ctx.num_types);
        ++ctx.num_types;
      } else if (h == "table") {
        if (f.items.size() > 1 && f.items[1].is_id())
          ctx.table_name = f.items[1].text;
        ctx.has_table = true;
      }
    }

    // Types first so functions can refer to them.
    for (size_t i = first; i < mod.items.size(); ++i)
      if (mod.items[i].is_form("type"))
        ast.types.push_back(parse_type_def(mod.items[i]));

    // Functions and globals get their slots reserved in declaration order.
    std::vector<const SExpr*> funcs;
    for (size_t i = first; i < mod.items.size(); ++i) {
      const SExpr& f = mod.items[i];
      std::string_view h = f.head();
      if (h == "type" || h == "elem" || h == "export")
        continue;
      if (h == "func")
        funcs.push_back(&f);
      else if (h == "global")
        ast.globals.push_back(parse_global(f));
      else if (h == "memory")
        parse_memory(f, ctx);
      else if (h == "import")
        parse_import(f, ctx);
      else if (h == "table")
        parse_table(f, ctx);
      else if (h == "data")
        parse_data(f);
      else if (h == "start")
        throw ValidationError(f.loc, "start functions are not supported");
      else if (!parse_annotation(f))
        throw SyntaxError(f.loc, "unsupported module field '" + std::string(h) + "'");
    }
    size_t func_slot = ast.functions.size();
    ast.functions.resize(ast.functions.size() + funcs.size());
    for (const SExpr* f : funcs)
      ast.functions[func_slot++] = parse_func(*f, ctx);

    for (size_t i = first; i < mod.items.size(); ++i) {
      const SExpr& f = mod.items[i];
      if (f.is_form("elem"))
        parse_elem(f, ctx);
      else if (f.is_form("export"))
        parse_export(f, ctx);
    }
  }

  FuncType parse_type_def(const SExpr& e) {
    size_t i = 1;
    if (i < e.items.size() && e.items[i].is_id())
      ++i;
    if (i >= e.items.size() || !e.items[i].is_form("func"))
      throw SyntaxError(e.loc, "expected (func ...) in type definition");
    FuncType t;
    for (size_t k = 1; k < e.items[i].items.size(); ++k) {
      const SExpr& p = e.items[i].items[k];
      if (p.is_form("param"))
        parse_params(p, t.params, nullptr);
      else if (p.is_form("result"))
        for (size_t j = 1; j < p.items.size(); ++j)
          t.results.push_back(parse_valtype(p.items[j]));
      else
        throw SyntaxError(p.loc, "unexpected item in function type");
    }
    return t;
  }

  // `(param $x i32)` or `(param i32 i64 ...)`; same shape for locals.
  static void parse_params(const SExpr& p, std::vector<ValType>& out,
                           std::unordered_map<std::string, uint32_t>* names,
                           uint32_t base = 0) {
    if (p.items.size() >= 2 && p.items[1].is_id()) {
      if (p.items.size() != 3)
        throw SyntaxError(p.loc, "named parameter must have exactly one type");
      if (names)
        names->emplace(p.items[1].text, base + uint32_t(out.size()));
      out.push_back(parse_valtype(p.items[2]));
      return;
    }
    for (size_t j = 1; j < p.items.size(); ++j)
      out.push_back(parse_valtype(p.items[j]));
  }

  GlobalDef parse_global(const SExpr& e) {
    GlobalDef g;
    size_t i = 1;
    if (i < e.items.size() && e.items[i].is_id())
      g.name = strip_dollar(e.items[i++].text);
    while (i < e.items.size() && e.items[i].is_form("export"))
      ++i;
    if (i < e.items.size() && e.items[i].is_form("import"))
      throw ValidationError(e.items[i].loc, "global imports are not supported");
    if (i >= e.items.size())
      throw SyntaxError(e.loc, "global needs a type");
    const SExpr& ty = e.items[i++];
    if (ty.is_form("mut")) {
      if (ty.items.size() != 2)
        throw SyntaxError(ty.loc, "malformed (mut ...)");
      g.mut = true;
      g.type = parse_valtype(ty.items[1]);
    } else {
      g.type = parse_valtype(ty);
    }
    if (i + 1 != e.items.size())
      throw SyntaxError(e.loc, "global needs exactly one constant initializer");
    const SExpr& init = e.items[i];
    std::string_view want = g.type == ValType::I32 ? "i32.const" : "i64.const";
    if (!init.is_form(want) || init.items.size() != 2)
      throw ValidationError(init.loc, "global initializer must be a constant of the global's type");
    g.init = parse_int(init.items[1], g.type);
    return g;
  }

  void parse_limits(const SExpr& e, size_t i, MemoryDecl& m) {
    if (i >= e.items.size())
      throw SyntaxError(e.loc, "memory needs a minimum page count");
    m.min_pages = parse_u32(e.items[i++]);
    if (i < e.items.size())
      m.max_pages = parse_u32(e.items[i++]);
    if (i != e.items.size())
      throw SyntaxError(e.loc, "unexpected item in memory limits");
  }

  void parse_memory(const SExpr& e, ModuleCtx& ctx) {
    MemoryCandidate c;
    c.module_id = ctx.id;
    c.loc = e.loc;
    size_t i = 1;
    if (i < e.items.size() && e.items[i].is_id())
      ++i;
    bool imported = false;
    while (i < e.items.size() && e.items[i].is_list()) {
      const SExpr& sub = e.items[i];
      if (sub.is_form("export") && sub.items.size() == 2 && sub.items[1].is_string()) {
        c.decl.exports.push_back(sub.items[1].text);
      } else if (sub.is_form("import") && sub.items.size() == 3) {
        c.decl.import = {sub.items[1].text, sub.items[2].text};
        imported = true;
      } else if (sub.is_form("data")) {
        throw SyntaxError(sub.loc, "inline memory data is not supported");
      } else {
        throw SyntaxError(sub.loc, "unexpected item in memory declaration");
      }
      ++i;
    }
    parse_limits(e, i, c.decl);
    (imported ? memory_imports_ : memory_defs_).push_back(std::move(c));
  }

  void parse_import(const SExpr& e, ModuleCtx& ctx) {
    if (e.items.size() != 4 || !e.items[1].is_string() || !e.items[2].is_string())
      throw SyntaxError(e.loc, "malformed import");
    const SExpr& desc = e.items[3];
    if (!desc.is_form("memory"))
      throw ValidationError(e.loc, "only a single imported memory is supported; '" +
                                       std::string(desc.head()) + "' imports are rejected");
    MemoryCandidate c;
    c.module_id = ctx.id;
    c.loc = e.loc;
    c.decl.import = {e.items[1].text, e.items[2].text};
    size_t i = 1;
    if (i < desc.items.size() && desc.items[i].is_id())
      ++i;
    parse_limits(desc, i, c.decl);
    memory_imports_.push_back(std::move(c));
  }

  void link_memory() {
    if (memory_defs_.size() > 1)
      throw ValidationError(memory_defs_[1].loc, "at most one linear memory may be declared");
    if (!memory_defs_.empty()) {
      const MemoryCandidate& def = memory_defs_[0];
      for (const MemoryCandidate& imp : memory_imports_) {
        const auto& [mod, name] = *imp.decl.import;
        bool matches = std::find(def.decl.exports.begin(), def.decl.exports.end(), name) !=
                       def.decl.exports.end();
        if (!matches || (!def.module_id.empty() && mod != def.module_id && mod != "env"))
          throw ValidationError(imp.loc, "memory import \"" + mod + "\" \"" + name +
                                             "\" does not resolve to the declared memory");
      }
      ast.memory = def.decl;
      return;
    }
    if (memory_imports_.size() > 1)
      throw ValidationError(memory_imports_[1].loc, "at most one linear memory may be imported");
    if (!memory_imports_.empty())
      ast.memory = memory_imports_[0].decl;
  }

  void parse_table(const SExpr& e, ModuleCtx& ctx) {
    if (table_seen_)
      throw ValidationError(e.loc, "at most one table is supported");
    table_seen_ = true;
    size_t i = 1;
    if (i < e.items.size() && e.items[i].is_id())
      ++i;
    while (i < e.items.size() && e.items[i].is_form("export"))
      ++i;
    if (i < e.items.size() && e.items[i].is_form("import"))
      throw ValidationError(e.items[i].loc, "table imports are not supported");
    if (i < e.items.size() && e.items[i].is_atom() && looks_numeric(e.items[i].text)) {
      uint32_t min = parse_u32(e.items[i++]);
      if (i < e.items.size() && e.items[i].is_atom() && looks_numeric(e.items[i].text))
        ++i;
      ast.table.assign(min, kNullFunc);
    }
    if (i >= e.items.size() || !(e.items[i].is_atom("funcref") || e.items[i].is_atom("anyfunc")))
      throw SyntaxError(e.loc, "table element type must be funcref");
    ++i;
    if (i < e.items.size() && e.items[i].is_form("elem")) {
      const SExpr& el = e.items[i];
      for (size_t k = 1; k < el.items.size(); ++k)
        ast.table.push_back(resolve_func(el.items[k], ctx));
    }
  }

  void parse_elem(const SExpr& e, const ModuleCtx& ctx) {
    if (!ctx.has_table)
      throw ValidationError(e.loc, "element segment without a table");
    size_t i = 1;
    if (i < e.items.size() && e.items[i].is_id() && e.items[i].text != ctx.table_name)
      ++i; // segment name
    if (i < e.items.size() && e.items[i].is_atom() &&
        (e.items[i].is_id() || looks_numeric(e.items[i].text)))
      ++i; // table index
    if (i < e.items.size() && e.items[i].is_form("table"))
      ++i;
    if (i >= e.items.size())
      throw SyntaxError(e.loc, "element segment needs an offset");
    const SExpr* off = &e.items[i++];
    if (off->is_form("offset")) {
      if (off->items.size() != 2)
        throw SyntaxError(off->loc, "malformed offset");
      off = &off->items[1];
    }
    uint32_t base = parse_const_address(*off);
    if (i < e.items.size() && e.items[i].is_atom("func"))
      ++i;
    for (uint32_t k = 0; i < e.items.size(); ++i, ++k) {
      uint32_t slot = base + k;
      if (slot >= ast.table.size())
        ast.table.resize(slot + 1, kNullFunc);
      ast.table[slot] = resolve_func(e.items[i], ctx);
    }
  }

  void parse_data(const SExpr& e) {
    size_t i = 1;
    if (i < e.items.size() && e.items[i].is_id())
      ++i;
    if (i < e.items.size() && e.items[i].is_form("memory"))
      ++i;
    if (i >= e.items.size())
      throw SyntaxError(e.loc, "data segment needs an offset");
    const SExpr* off = &e.items[i++];
    if (off->is_form("offset")) {
      if (off->items.size() != 2)
        throw SyntaxError(off->loc, "malformed offset");
      off = &off->items[1];
    }
    DataSegment seg;
    seg.offset = parse_const_address(*off);
    for (; i < e.items.size(); ++i) {
      if (!e.items[i].is_string())
        throw SyntaxError(e.items[i].loc, "data segment contents must be strings");
      seg.bytes += e.items[i].text;
    }
    ast.data.push_back(std::move(seg));
  }

  void parse_export(const SExpr& e, const ModuleCtx& ctx) {
    if (e.items.size() != 3 || !e.items[1].is_string() || !e.items[2].is_list())
      throw SyntaxError(e.loc, "malformed export");
    const SExpr& desc = e.items[2];
    const std::string& name = e.items[1].text;
    if (desc.is_form("func") && desc.items.size() == 2) {
      ast.functions[resolve_func(desc.items[1], ctx)].exports.push_back(name);
    } else if (desc.is_form("memory")) {
      bool found = false;
      for (auto& def : memory_defs_)
        if (def.module_id == ctx.id) {
          def.decl.exports.push_back(name);
          found = true;
        }
      if (!found)
        for (auto& imp : memory_imports_)
          if (imp.module_id == ctx.id) {
            imp.decl.exports.push_back(name);
            found = true;
          }
      if (!found)
        throw ValidationError(e.loc, "export of an undeclared memory");
    } else if (desc.is_form("global") || desc.is_form("table")) {
      // Irrelevant to the analysis.
    } else {
      throw SyntaxError(e.loc, "unsupported export kind");
    }
  }

  uint32_t resolve_func(const SExpr& ref, const ModuleCtx& ctx) const {
    if (ref.is_id()) {
      auto it = ctx.func_names.find(ref.text);
      if (it == ctx.func_names.end())
        throw ValidationError(ref.loc, "unknown function " + ref.text);
      return it->second;
    }
    uint32_t idx = parse_u32(ref);
    if (idx >= ctx.num_funcs)
      throw ValidationError(ref.loc, "function index " + std::to_string(idx) + " out of range");
    return ctx.func_base + idx;
  }

  // -- functions ----------------------------------------------------------------

  FuncDef parse_func(const SExpr& e, const ModuleCtx& ctx);

  friend class BodyParser;

public:
  uint32_t intern_type(const FuncType& t) {
    for (uint32_t i = 0; i < ast.types.size(); ++i)
      if (ast.types[i] == t)
        return i;
    ast.types.push_back(t);
    return uint32_t(ast.types.size() - 1);
  }
};

class BodyParser {
public:
  BodyParser(Parser& p, const ModuleCtx& ctx, const std::unordered_map<std::string, uint32_t>& locals,
             uint32_t num_locals)
      : p_(p), ctx_(ctx), locals_(locals), num_locals_(num_locals) {}

  std::vector<Instr> parse_body(const std::vector<SExpr>& items, size_t pos) {
    std::vector<Instr> out;
    parse_seq(items, pos, out);
    if (pos != items.size())
      throw SyntaxError(items[pos].loc, "unexpected '" + items[pos].text + "'");
    return out;
  }

private:
  Parser& p_;
  const ModuleCtx& ctx_;
  const std::unordered_map<std::string, uint32_t>& locals_;
  uint32_t num_locals_;
  std::vector<std::optional<std::string>> labels_;

  // Parses instructions until `end`/`else` (not consumed) or the end of items.
  void parse_seq(const std::vector<SExpr>& items, size_t& pos, std::vector<Instr>& out) {
    while (pos < items.size()) {
      const SExpr& e = items[pos];
      if (e.is_list()) {
        parse_folded(e, out);
        ++pos;
        continue;
      }
      if (e.is_atom("end") || e.is_atom("else"))
        return;
      parse_plain(items, pos, out);
    }
  }

  Op lookup_op(const SExpr& e) const {
    if (!e.is_atom())
      throw SyntaxError(e.loc, "expected instruction");
    auto op = op_from_name(e.text);
    if (!op) {
      if (e.text.rfind("f32.", 0) == 0 || e.text.rfind("f64.", 0) == 0 ||
          e.text.find("_f32") != std::string::npos || e.text.find("_f64") != std::string::npos)
        throw SyntaxError(e.loc, "floating-point instruction '" + e.text + "' is not supported");
      throw SyntaxError(e.loc, "unsupported instruction '" + e.text + "'");
    }
    return *op;
  }

  std::optional<std::string> take_label(const std::vector<SExpr>& items, size_t& pos) {
    if (pos < items.size() && items[pos].is_id())
      return items[pos++].text;
    return std::nullopt;
  }

  std::optional<ValType> take_blocktype(const std::vector<SExpr>& items, size_t& pos) {
    std::optional<ValType> result;
    while (pos < items.size() && items[pos].is_list()) {
      const SExpr& e = items[pos];
      if (e.is_form("result")) {
        if (e.items.size() > 2 || (result && e.items.size() == 2))
          throw ValidationError(e.loc, "multi-value blocks are not supported");
        if (e.items.size() == 2)
          result = parse_valtype(e.items[1]);
        ++pos;
      } else if (e.is_form("param")) {
        throw ValidationError(e.loc, "block parameters are not supported");
      } else if (e.is_form("type")) {
        throw ValidationError(e.loc, "typed blocks are not supported");
      } else {
        break;
      }
    }
    return result;
  }

  uint32_t resolve_label(const SExpr& e) const {
    if (e.is_id()) {
      for (size_t d = 0; d < labels_.size(); ++d)
        if (labels_[labels_.size() - 1 - d] == e.text)
          return uint32_t(d);
      throw ValidationError(e.loc, "unknown label " + e.text);
    }
    return parse_u32(e);
  }

  uint32_t resolve_local(const SExpr& e) const {
    if (e.is_id()) {
      auto it = locals_.find(e.text);
      if (it == locals_.end())
        throw ValidationError(e.loc, "unknown local " + e.text);
      return it->second;
    }
    uint32_t i = parse_u32(e);
    if (i >= num_locals_)
      throw ValidationError(e.loc, "local index " + std::to_string(i) + " out of range");
    return i;
  }

  uint32_t resolve_global(const SExpr& e) const {
    if (e.is_id()) {
      auto it = ctx_.global_names.find(e.text);
      if (it == ctx_.global_names.end())
        throw ValidationError(e.loc, "unknown global " + e.text);
      return it->second;
    }
    uint32_t i = parse_u32(e);
    if (i >= ctx_.num_globals)
      throw ValidationError(e.loc, "global index " + std::to_string(i) + " out of range");
    return ctx_.global_base + i;
  }

  uint32_t resolve_type(const SExpr& e) const {
    if (e.is_id()) {
      auto it = ctx_.type_names.find(e.text);
      if (it == ctx_.type_names.end())
        throw ValidationError(e.loc, "unknown type " + e.text);
      return it->second;
    }
    uint32_t i = parse_u32(e);
    if (i >= ctx_.num_types)
      throw ValidationError(e.loc, "type index " + std::to_string(i) + " out of range");
    return ctx_.type_base + i;
  }

  static bool is_ref_atom(const SExpr& e) {
    return e.is_atom() && (e.is_id() || looks_numeric(e.text));
  }

  // Reads the immediates of a non-structured instruction starting at
  // items[pos]; pos ends past the last immediate.
  Instr parse_immediates(Op op, const SExpr& head, const std::vector<SExpr>& items, size_t& pos) {
    Instr in;
    in.op = op;
    in.loc = head.loc;
    const OpInfo& info = op_info(op);
    auto need = [&](const char* what) -> const SExpr& {
      if (pos >= items.size() || !items[pos].is_atom())
        throw SyntaxError(head.loc, std::string(info.name) + " expects " + what);
      return items[pos++];
    };
    switch (info.cls) {
    case OpClass::Const:
      in.imm = parse_int(need("a constant"), info.type);
      break;
    case OpClass::Load:
    case OpClass::Store: {
      uint32_t natural = 0;
      while ((1u << natural) < info.bytes)
        ++natural;
      in.align = natural;
      while (pos < items.size() && items[pos].is_atom()) {
        const std::string& t = items[pos].text;
        if (t.rfind("offset=", 0) == 0) {
          SExpr tmp = items[pos];
          tmp.text = t.substr(7);
          in.offset = parse_u32(tmp);
        } else if (t.rfind("align=", 0) == 0) {
          SExpr tmp = items[pos];
          tmp.text = t.substr(6);
          uint32_t a = parse_u32(tmp);
          if (a == 0 || (a & (a - 1)) != 0)
            throw SyntaxError(items[pos].loc, "alignment must be a power of two");
          uint32_t lg = 0;
          while ((1u << lg) < a)
            ++lg;
          in.align = lg;
        } else {
          break;
        }
        ++pos;
      }
      break;
    }
    case OpClass::Variable:
      if (op == Op::GlobalGet || op == Op::GlobalSet)
        in.imm = resolve_global(need("a global index"));
      else
        in.imm = resolve_local(need("a local index"));
      break;
    case OpClass::Parametric:
      if (op == Op::Select)
        in.result = take_blocktype(items, pos);
      break;
    case OpClass::Control:
      switch (op) {
      case Op::Br:
      case Op::BrIf:
        in.imm = resolve_label(need("a label"));
        break;
      case Op::BrTable:
        while (pos < items.size() && is_ref_atom(items[pos]))
          in.targets.push_back(resolve_label(items[pos++]));
        if (in.targets.empty())
          throw SyntaxError(head.loc, "br_table needs at least a default label");
        break;
      case Op::Call: {
        const SExpr& f = need("a function index");
        in.imm = resolve_func_ref(f);
        break;
      }
      case Op::CallIndirect: {
        if (pos < items.size() && is_ref_atom(items[pos]))
          ++pos; // table index; only one table exists
        std::optional<uint32_t> type_idx;
        FuncType inline_type;
        bool has_inline = false;
        while (pos < items.size() && items[pos].is_list()) {
          const SExpr& s = items[pos];
          if (s.is_form("type") && s.items.size() == 2) {
            type_idx = resolve_type(s.items[1]);
          } else if (s.is_form("param")) {
            Parser::parse_params(s, inline_type.params, nullptr);
            has_inline = true;
          } else if (s.is_form("result")) {
            for (size_t j = 1; j < s.items.size(); ++j)
              inline_type.results.push_back(parse_valtype(s.items[j]));
            has_inline = true;
          } else {
            break;
          }
          ++pos;
        }
        if (type_idx) {
          if (has_inline && p_.ast.types[*type_idx] != inline_type)
            throw ValidationError(head.loc, "call_indirect inline signature disagrees with its type");
          in.imm = *type_idx;
        } else {
          in.imm = p_.intern_type(inline_type);
        }
        break;
      }
      default:
        break;
      }
      break;
    default:
      break;
    }
    return in;
  }

  uint32_t resolve_func_ref(const SExpr& f) const {
    if (f.is_id()) {
      auto it = ctx_.func_names.find(f.text);
      if (it == ctx_.func_names.end())
        throw ValidationError(f.loc, "unknown function " + f.text);
      return it->second;
    }
    uint32_t i = parse_u32(f);
    if (i >= ctx_.num_funcs)
      throw ValidationError(f.loc, "function index " + std::to_string(i) + " out of range");
    return ctx_.func_base + i;
  }

  void expect_end(const std::vector<SExpr>& items, size_t& pos, const SExpr& opener,
                  const std::optional<std::string>& label) {
    if (pos >= items.size() || !items[pos].is_atom("end"))
      throw SyntaxError(opener.loc, "missing 'end' for " + opener.text);
    ++pos;
    if (pos < items.size() && items[pos].is_id()) {
      if (items[pos].text != label)
        throw SyntaxError(items[pos].loc, "mismatched end label");
      ++pos;
    }
  }

  void parse_plain(const std::vector<SExpr>& items, size_t& pos, std::vector<Instr>& out) {
    const SExpr& head = items[pos++];
    Op op = lookup_op(head);
    if (op == Op::Block || op == Op::Loop || op == Op::If) {
      Instr in;
      in.op = op;
      in.loc = head.loc;
      auto label = take_label(items, pos);
      in.result = take_blocktype(items, pos);
      labels_.push_back(label);
      parse_seq(items, pos, in.body);
      if (op == Op::If && pos < items.size() && items[pos].is_atom("else")) {
        ++pos;
        if (pos < items.size() && items[pos].is_id())
          ++pos;
        parse_seq(items, pos, in.else_body);
      }
      labels_.pop_back();
      expect_end(items, pos, head, label);
      out.push_back(std::move(in));
      return;
    }
    out.push_back(parse_immediates(op, head, items, pos));
  }

  void parse_folded(const SExpr& e, std::vector<Instr>& out) {
    if (e.items.empty())
      throw SyntaxError(e.loc, "empty instruction");
    const SExpr& head = e.items[0];
    Op op = lookup_op(head);
    size_t pos = 1;
    if (op == Op::Block || op == Op::Loop) {
      Instr in;
      in.op = op;
      in.loc = head.loc;
      auto label = take_label(e.items, pos);
      in.result = take_blocktype(e.items, pos);
      labels_.push_back(label);
      parse_seq(e.items, pos, in.body);
      labels_.pop_back();
      if (pos != e.items.size())
        throw SyntaxError(e.items[pos].loc, "unexpected '" + e.items[pos].text + "' in folded block");
      out.push_back(std::move(in));
      return;
    }
    if (op == Op::If) {
      Instr in;
      in.op = op;
      in.loc = head.loc;
      auto label = take_label(e.items, pos);
      in.result = take_blocktype(e.items, pos);
      // Condition operands come before (then ...).
      while (pos < e.items.size() && !e.items[pos].is_form("then"))
        parse_folded_operand(e.items[pos++], out);
      if (pos >= e.items.size())
        throw SyntaxError(e.loc, "folded if needs (then ...)");
      labels_.push_back(label);
      {
        const SExpr& then = e.items[pos++];
        size_t p = 1;
        parse_seq(then.items, p, in.body);
        if (p != then.items.size())
          throw SyntaxError(then.items[p].loc, "unexpected item in (then ...)");
      }
      if (pos < e.items.size() && e.items[pos].is_form("else")) {
        const SExpr& els = e.items[pos++];
        size_t p = 1;
        parse_seq(els.items, p, in.else_body);
        if (p != els.items.size())
          throw SyntaxError(els.items[p].loc, "unexpected item in (else ...)");
      }
      labels_.pop_back();
      if (pos != e.items.size())
        throw SyntaxError(e.items[pos].loc, "unexpected item after folded if");
      out.push_back(std::move(in));
      return;
    }
    Instr in = parse_immediates(op, head, e.items, pos);
    for (; pos < e.items.size(); ++pos)
      parse_folded_operand(e.items[pos], out);
    out.push_back(std::move(in));
  }

  void parse_folded_operand(const SExpr& e, std::vector<Instr>& out) {
    if (!e.is_list())
      throw SyntaxError(e.loc, "expected folded instruction, got '" + e.text + "'");
    parse_folded(e, out);
  }
};

FuncDef Parser::parse_func(const SExpr& e, const ModuleCtx& ctx) {
  FuncDef f;
  f.loc = e.loc;
  size_t i = 1;
  if (i < e.items.size() && e.items[i].is_id())
    f.name = strip_dollar(e.items[i++].text);
  std::unordered_map<std::string, uint32_t> local_names;
  std::optional<uint32_t> type_use;
  bool explicit_sig = false;
  for (; i < e.items.size() && e.items[i].is_list(); ++i) {
    const SExpr& s = e.items[i];
    if (s.is_form("export")) {
      if (s.items.size() != 2 || !s.items[1].is_string())
        throw SyntaxError(s.loc, "malformed inline export");
      f.exports.push_back(s.items[1].text);
    } else if (s.is_form("type")) {
      if (s.items.size() != 2)
        throw SyntaxError(s.loc, "malformed type use");
      const SExpr& r = s.items[1];
      if (r.is_id()) {
        auto it = ctx.type_names.find(r.text);
        if (it == ctx.type_names.end())
          throw ValidationError(r.loc, "unknown type " + r.text);
        type_use = it->second;
      } else {
        uint32_t idx = parse_u32(r);
        if (idx >= ctx.num_types)
          throw ValidationError(r.loc, "type index out of range");
        type_use = ctx.type_base + idx;
      }
    } else if (s.is_form("param")) {
      parse_params(s, f.params, &local_names);
      explicit_sig = true;
    } else if (s.is_form("result")) {
      for (size_t j = 1; j < s.items.size(); ++j)
        f.results.push_back(parse_valtype(s.items[j]));
      explicit_sig = true;
    } else if (s.is_form("local")) {
      parse_params(s, f.locals, &local_names, uint32_t(f.params.size()));
    } else {
      break;
    }
  }
  if (type_use) {
    const FuncType& t = ast.types[*type_use];
    if (!explicit_sig) {
      f.params = t.params;
      f.results = t.results;
    } else if (t != f.type()) {
      throw ValidationError(e.loc, "function signature disagrees with its type use");
    }
  }
  if (f.results.size() > 1)
    throw ValidationError(e.loc, "multi-value results are not supported");
  BodyParser body(*this, ctx, local_names, uint32_t(f.num_locals()));
  f.body = body.parse_body(e.items, i);
  return f;
}

// ---------------------------------------------------------------------------
// Validation

class FuncChecker {
public:
  FuncChecker(const ModuleAst& m, const FuncDef& f) : m_(m), f_(f) {}

  void run() {
    frames_.push_back({Op::Block, f_.results.empty() ? std::nullopt : std::optional(f_.results[0]),
                       0, false, true});
    check_seq(f_.body);
    end_frame(f_.loc);
  }

private:
  struct Frame {
    Op kind;
    std::optional<ValType> result;
    size_t height;
    bool unreachable;
    bool is_func;
  };

  const ModuleAst& m_;
  const FuncDef& f_;
  std::vector<std::optional<ValType>> st_;
  std::vector<Frame> frames_;

  [[noreturn]] void fail(SourceLoc loc, const std::string& msg) const {
    std::string where = f_.name.empty() ? "function" : "function $" + f_.name;
    throw ValidationError(loc, where + ": " + msg);
  }

  void push(ValType t) { st_.push_back(t); }

  std::optional<ValType> pop(SourceLoc loc) {
    Frame& fr = frames_.back();
    if (st_.size() == fr.height) {
      if (fr.unreachable)
        return std::nullopt;
      fail(loc, "value stack underflow");
    }
    auto t = st_.back();
    st_.pop_back();
    return t;
  }

  void pop_expect(ValType want, SourceLoc loc) {
    auto got = pop(loc);
    if (got && *got != want)
      fail(loc, "type mismatch: expected " + std::string(type_name(want)) + ", got " +
                    std::string(type_name(*got)));
  }

  void set_unreachable() {
    Frame& fr = frames_.back();
    st_.resize(fr.height);
    fr.unreachable = true;
  }

  std::optional<ValType> label_type(uint32_t depth, SourceLoc loc) const {
    if (depth >= frames_.size())
      fail(loc, "branch depth " + std::to_string(depth) + " exceeds nesting depth");
    const Frame& fr = frames_[frames_.size() - 1 - depth];
    if (fr.kind == Op::Loop)
      return std::nullopt;
    return fr.result;
  }

  void end_frame(SourceLoc loc) {
    Frame& fr = frames_.back();
    if (fr.result)
      pop_expect(*fr.result, loc);
    if (st_.size() != fr.height)
      fail(loc, "values remaining on stack at end of block");
    auto result = fr.result;
    frames_.pop_back();
    if (result)
      push(*result);
  }

  void check_seq(const std::vector<Instr>& body) {
    for (const Instr& in : body)
      check(in);
  }

  void check(const Instr& in) {
    const OpInfo& info = op_info(in.op);
    SourceLoc loc = in.loc;
    auto need_memory = [&] {
      if (!m_.memory)
        fail(loc, std::string(info.name) + " without a memory");
      uint32_t natural = 0;
      while ((1u << natural) < info.bytes)
        ++natural;
      if (in.align > natural)
        fail(loc, "alignment exceeds natural alignment");
    };
    switch (info.cls) {
    case OpClass::Const:
      push(info.type);
      return;
    case OpClass::Binary:
      pop_expect(info.type, loc);
      pop_expect(info.type, loc);
      push(info.type);
      return;
    case OpClass::Unary:
      pop_expect(info.type, loc);
      push(info.type);
      return;
    case OpClass::Compare:
      pop_expect(info.type, loc);
      if (info.arith != Arith::Eqz)
        pop_expect(info.type, loc);
      push(ValType::I32);
      return;
    case OpClass::Convert:
      pop_expect(info.type, loc);
      push(info.type == ValType::I32 ? ValType::I64 : ValType::I32);
      return;
    case OpClass::Load:
      need_memory();
      pop_expect(ValType::I32, loc);
      push(info.type);
      return;
    case OpClass::Store:
      need_memory();
      pop_expect(info.type, loc);
      pop_expect(ValType::I32, loc);
      return;
    case OpClass::Variable: {
      if (in.op == Op::GlobalGet || in.op == Op::GlobalSet) {
        if (in.imm < 0 || size_t(in.imm) >= m_.globals.size())
          fail(loc, "unknown global");
        const GlobalDef& g = m_.globals[size_t(in.imm)];
        if (in.op == Op::GlobalGet) {
          push(g.type);
        } else {
          if (!g.mut)
            fail(loc, "global.set on an immutable global");
          pop_expect(g.type, loc);
        }
        return;
      }
      if (in.imm < 0 || size_t(in.imm) >= f_.num_locals())
        fail(loc, "unknown local");
      ValType t = f_.local_type(size_t(in.imm));
      if (in.op == Op::LocalGet) {
        push(t);
      } else {
        pop_expect(t, loc);
        if (in.op == Op::LocalTee)
          push(t);
      }
      return;
    }
    case OpClass::Parametric:
      if (in.op == Op::Drop) {
        pop(loc);
        return;
      }
      {
        pop_expect(ValType::I32, loc);
        auto a = pop(loc);
        auto b = pop(loc);
        if (a && b && *a != *b)
          fail(loc, "select operands differ in type");
        if (in.result && ((a && *a != *in.result) || (b && *b != *in.result)))
          fail(loc, "select operands disagree with annotated type");
        auto t = a ? a : (b ? b : in.result);
        if (t)
          push(*t);
        else
          st_.push_back(std::nullopt);
      }
      return;
    case OpClass::Control:
      break;
    }
    switch (in.op) {
    case Op::Unreachable:
      set_unreachable();
      return;
    case Op::Nop:
      return;
    case Op::Block:
    case Op::Loop:
      frames_.push_back({in.op, in.result, st_.size(), false, false});
      check_seq(in.body);
      end_frame(loc);
      return;
    case Op::If: {
      pop_expect(ValType::I32, loc);
      if (in.result && in.else_body.empty())
        fail(loc, "if with a result needs an else branch");
      size_t h = st_.size();
      frames_.push_back({Op::If, in.result, h, false, false});
      check_seq(in.body);
      end_frame(loc);
      if (in.result)
        st_.pop_back();
      frames_.push_back({Op::If, in.result, h, false, false});
      check_seq(in.else_body);
      end_frame(loc);
      return;
    }
    case Op::Br: {
      auto t = label_type(uint32_t(in.imm), loc);
      if (t)
        pop_expect(*t, loc);
      set_unreachable();
      return;
    }
    case Op::BrIf: {
      pop_expect(ValType::I32, loc);
      auto t = label_type(uint32_t(in.imm), loc);
      if (t) {
        pop_expect(*t, loc);
        push(*t);
      }
      return;
    }
    case Op::BrTable: {
      pop_expect(ValType::I32, loc);
      auto t = label_type(in.targets.back(), loc);
      for (uint32_t d : in.targets)
        if (label_type(d, loc) != t)
          fail(loc, "br_table targets have inconsistent types");
      if (t)
        pop_expect(*t, loc);
      set_unreachable();
      return;
    }
    case Op::Return:
      if (!f_.results.empty())
        pop_expect(f_.results[0], loc);
      set_unreachable();
      return;
    case Op::Call: {
      if (in.imm < 0 || size_t(in.imm) >= m_.functions.size())
        fail(loc, "unknown function");
      const FuncDef& callee = m_.functions[size_t(in.imm)];
      for (size_t k = callee.params.size(); k-- > 0;)
        pop_expect(callee.params[k], loc);
      for (ValType t : callee.results)
        push(t);
      return;
    }
    case Op::CallIndirect: {
      if (m_.table.empty())
        fail(loc, "call_indirect without a table");
      if (in.imm < 0 || size_t(in.imm) >= m_.types.size())
        fail(loc, "unknown type");
      const FuncType& t = m_.types[size_t(in.imm)];
      pop_expect(ValType::I32, loc);
      for (size_t k = t.params.size(); k-- > 0;)
        pop_expect(t.params[k], loc);
      if (t.results.size() > 1)
        fail(loc, "multi-value results are not supported");
      for (ValType r : t.results)
        push(r);
      return;
    }
    default:
      fail(loc, "unexpected instruction");
    }
  }
};

void number_body(std::vector<Instr>& body, uint32_t& next) {
  for (Instr& in : body) {
    in.id = next++;
    number_body(in.body, next);
    number_body(in.else_body, next);
  }
}

// ---------------------------------------------------------------------------
// Printing

std::string escape_string(std::string_view s) {
  static const char* hex = "0123456789abcdef";
  std::string out = "\"";
  for (unsigned char c : s) {
    if (c >= 0x20 && c < 0x7F && c != '"' && c != '\\') {
      out.push_back(char(c));
    } else {
      out.push_back('\\');
      out.push_back(hex[c >> 4]);
      out.push_back(hex[c & 15]);
    }
  }
  out.push_back('"');
  return out;
}

void print_types(std::ostringstream& os, const std::vector<ValType>& ts, const char* kw) {
  if (ts.empty())
    return;
  os << " (" << kw;
  for (ValType t : ts)
    os << ' ' << type_name(t);
  os << ')';
}

void print_body(std::ostringstream& os, const std::vector<Instr>& body, int indent) {
  for (const Instr& in : body) {
    os << std::string(size_t(indent) * 2, ' ');
    const OpInfo& info = op_info(in.op);
    os << info.name;
    switch (info.cls) {
    case OpClass::Const:
      os << ' ' << in.imm;
      break;
    case OpClass::Load:
    case OpClass::Store: {
      if (in.offset)
        os << " offset=" << in.offset;
      uint32_t natural = 0;
      while ((1u << natural) < info.bytes)
        ++natural;
      if (in.align != natural)
        os << " align=" << (1u << in.align);
      break;
    }
    case OpClass::Variable:
      os << ' ' << in.imm;
      break;
    case OpClass::Parametric:
      if (in.result)
        os << " (result " << type_name(*in.result) << ')';
      break;
    default:
      break;
    }
    switch (in.op) {
    case Op::Block:
    case Op::Loop:
    case Op::If:
      if (in.result)
        os << " (result " << type_name(*in.result) << ')';
      os << '\n';
      print_body(os, in.body, indent + 1);
      if (in.op == Op::If && !in.else_body.empty()) {
        os << std::string(size_t(indent) * 2, ' ') << "else\n";
        print_body(os, in.else_body, indent + 1);
      }
      os << std::string(size_t(indent) * 2, ' ') << "end\n";
      continue;
    case Op::Br:
    case Op::BrIf:
    case Op::Call:
      os << ' ' << in.imm;
      break;
    case Op::BrTable:
      for (uint32_t t : in.targets)
        os << ' ' << t;
      break;
    case Op::CallIndirect:
      os << " (type " << in.imm << ')';
      break;
    default:
      break;
    }
    os << '\n';
  }
}

} // namespace

Secrecy classify_label(std::string_view label, SourceLoc loc) {
  if (!label.empty() && label[0] == '$')
    label.remove_prefix(1);
  if (!label.empty() && label[0] == 'l')
    return Secrecy::Public;
  if (!label.empty() && label[0] == 'h')
    return Secrecy::Secret;
  throw SyntaxError(loc, "symbolic label '" + std::string(label) +
                             "' must start with 'l' (public) or 'h' (secret)");
}

ModuleAst parse_module(std::string_view source) {
  Parser p;
  p.add_source(source);
  return p.finish();
}

ModuleAst parse_modules(const std::vector<std::string>& sources) {
  Parser p;
  for (const auto& s : sources)
    p.add_source(s);
  return p.finish();
}

void number_instructions(ModuleAst& ast) {
  uint32_t next = 1;
  for (FuncDef& f : ast.functions)
    number_body(f.body, next);
}

void validate(const ModuleAst& ast) {
  for (const FuncDef& f : ast.functions)
    FuncChecker(ast, f).run();
  for (uint32_t idx : ast.table)
    if (idx != kNullFunc && idx >= ast.functions.size())
      throw ValidationError({}, "table entry refers to an unknown function");

  uint64_t mem_size = ast.memory ? ast.memory->size_bytes() : 0;
  for (const DataSegment& d : ast.data)
    if (!ast.memory || uint64_t(d.offset) + d.bytes.size() > mem_size)
      throw ValidationError({}, "data segment at " + std::to_string(d.offset) +
                                    " lies outside the declared memory");
  for (size_t i = 0; i < ast.policies.size(); ++i) {
    const PolicyRange& r = ast.policies[i];
    if (r.start > r.end)
      throw PolicyError(r.loc, "policy range start exceeds end");
    if (!ast.memory)
      throw PolicyError(r.loc, "policy range without a declared memory");
    if (uint64_t(r.end) >= mem_size)
      throw PolicyError(r.loc, "policy range [" + std::to_string(r.start) + "," +
                                   std::to_string(r.end) + "] exceeds memory size " +
                                   std::to_string(mem_size));
    for (size_t j = 0; j < i; ++j) {
      const PolicyRange& o = ast.policies[j];
      if (o.cls != r.cls && r.start <= o.end && o.start <= r.end)
        throw PolicyError(r.loc, "public and secret policy ranges overlap");
    }
  }
}

std::string print_module(const ModuleAst& ast) {
  std::ostringstream os;
  os << "(module\n";
  for (const FuncType& t : ast.types) {
    os << "  (type (func";
    print_types(os, t.params, "param");
    print_types(os, t.results, "result");
    os << "))\n";
  }
  if (ast.memory) {
    const MemoryDecl& m = *ast.memory;
    os << "  (memory";
    for (const auto& e : m.exports)
      os << " (export " << escape_string(e) << ')';
    if (m.import)
      os << " (import " << escape_string(m.import->first) << ' '
         << escape_string(m.import->second) << ')';
    os << ' ' << m.min_pages;
    if (m.max_pages)
      os << ' ' << *m.max_pages;
    os << ")\n";
  }
  for (const GlobalDef& g : ast.globals) {
    os << "  (global";
    if (!g.name.empty())
      os << " $" << g.name;
    if (g.mut)
      os << " (mut " << type_name(g.type) << ')';
    else
      os << ' ' << type_name(g.type);
    os << " (" << type_name(g.type) << ".const " << g.init << "))\n";
  }
  if (!ast.table.empty()) {
    os << "  (table " << ast.table.size() << " funcref)\n";
    for (size_t i = 0; i < ast.table.size();) {
      if (ast.table[i] == kNullFunc) {
        ++i;
        continue;
      }
      os << "  (elem (i32.const " << i << ") func";
      for (; i < ast.table.size() && ast.table[i] != kNullFunc; ++i)
        os << ' ' << ast.table[i];
      os << ")\n";
    }
  }
  for (const DataSegment& d : ast.data)
    os << "  (data (i32.const " << d.offset << ") " << escape_string(d.bytes) << ")\n";
  for (const PolicyRange& r : ast.policies)
    os << "  (" << (r.cls == Secrecy::Secret ? "secret" : "public") << " (i32.const "
       << r.start << ") (i32.const " << r.end << "))\n";
  for (const FuncDef& f : ast.functions) {
    os << "  (func";
    if (!f.name.empty())
      os << " $" << f.name;
    for (const auto& e : f.exports)
      os << " (export " << escape_string(e) << ')';
    print_types(os, f.params, "param");
    print_types(os, f.results, "result");
    print_types(os, f.locals, "local");
    os << '\n';
    print_body(os, f.body, 2);
    os << "  )\n";
  }
  if (ast.entry) {
    os << "  (symb_exec " << escape_string(ast.entry->function_name);
    for (const ArgSpec& a : ast.entry->args) {
      if (const auto* c = std::get_if<ConcreteArg>(&a))
        os << " (" << type_name(c->type) << ".sconst " << c->value << ')';
      else {
        const auto& s = std::get<SymbolicArg>(a);
        os << " (" << type_name(s.type) << ".sconst " << s.label << ')';
      }
    }
    os << ")\n";
  }
  os << ")\n";
  return os.str();
}

ResolvedEntry resolve_entry(const ModuleAst& ast) {
  if (!ast.entry)
    throw EntryError("MissingEntry", "no symb_exec entry point given");
  const EntrySpec& e = *ast.entry;
  auto idx = ast.find_function(e.function_name);
  if (!idx)
    throw EntryError("UnknownFunction", "entry function '" + e.function_name + "' not found");
  const FuncDef& f = ast.functions[*idx];
  if (f.params.size() != e.args.size())
    throw EntryError("ArityMismatch", "entry function '" + e.function_name + "' takes " +
                                          std::to_string(f.params.size()) + " arguments, " +
                                          std::to_string(e.args.size()) + " given");
  std::vector<std::string> seen;
  for (size_t i = 0; i < e.args.size(); ++i) {
    ValType t = std::visit([](const auto& a) { return a.type; }, e.args[i]);
    if (t != f.params[i])
      throw EntryError("ArityMismatch", "argument " + std::to_string(i) + " of '" +
                                            e.function_name + "' has type " +
                                            std::string(type_name(f.params[i])));
    if (const auto* s = std::get_if<SymbolicArg>(&e.args[i])) {
      if (std::find(seen.begin(), seen.end(), s->label) != seen.end())
        throw PolicyError(e.loc, "symbolic label '" + s->label + "' used twice");
      seen.push_back(s->label);
    }
  }
  return {*idx, &f, e};
}

} // namespace relct::wat

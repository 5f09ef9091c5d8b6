#include "relct/solver.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "relct/error.hpp"

extern char** environ;

namespace relct {

const char* query_kind_name(QueryKind k) {
  switch (k) {
  case QueryKind::MemIndexDivergence: return "MemIndexDivergence";
  case QueryKind::BranchDivergence: return "BranchDivergence";
  case QueryKind::PolicyProbe: return "PolicyProbe";
  case QueryKind::InvariantAssert: return "InvariantAssert";
  case QueryKind::Feasibility: return "Feasibility";
  }
  return "?";
}

const char* status_name(SolverStatus s) {
  switch (s) {
  case SolverStatus::Sat: return "sat";
  case SolverStatus::Unsat: return "unsat";
  case SolverStatus::Unknown: return "unknown";
  case SolverStatus::Timeout: return "timeout";
  case SolverStatus::Error: return "error";
  }
  return "?";
}

QueryFormula make_query(QueryKind kind, std::vector<const Node*> assertions) {
  QueryFormula q;
  q.kind = kind;
  q.assertions = std::move(assertions);
  q.expr_count = count_nodes(q.assertions);
  return q;
}

// ---------------------------------------------------------------------------
// Encoding

namespace {

std::string sanitize(const std::string& s) {
  std::string out;
  for (char c : s) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
              c == '_' || c == '.';
    out.push_back(ok ? c : '_');
  }
  if (out.empty() || (out[0] >= '0' && out[0] <= '9'))
    out.insert(out.begin(), 's');
  return out;
}

std::string sort_of(const Node* n) {
  if (n->is_array())
    return "(Array (_ BitVec 32) (_ BitVec 8))";
  return "(_ BitVec " + std::to_string(n->width) + ")";
}

std::string literal(uint64_t v, unsigned w) {
  static const char* hex = "0123456789abcdef";
  std::string s;
  if (w % 4 == 0) {
    s = "#x";
    for (int i = int(w / 4) - 1; i >= 0; --i)
      s.push_back(hex[(v >> (4 * i)) & 15]);
  } else {
    s = "#b";
    for (int i = int(w) - 1; i >= 0; --i)
      s.push_back(((v >> i) & 1) ? '1' : '0');
  }
  return s;
}

const char* smt_op(Kind k) {
  switch (k) {
  case Kind::Add: return "bvadd";
  case Kind::Sub: return "bvsub";
  case Kind::Mul: return "bvmul";
  case Kind::DivS: return "bvsdiv";
  case Kind::DivU: return "bvudiv";
  case Kind::RemS: return "bvsrem";
  case Kind::RemU: return "bvurem";
  case Kind::And: return "bvand";
  case Kind::Or: return "bvor";
  case Kind::Xor: return "bvxor";
  case Kind::ShrS: return "bvashr";
  case Kind::ShrU: return "bvlshr";
  case Kind::Shl: return "bvshl";
  case Kind::Eq: return "=";
  case Kind::LtS: return "bvslt";
  case Kind::LtU: return "bvult";
  case Kind::LeS: return "bvsle";
  case Kind::LeU: return "bvule";
  case Kind::GtS: return "bvsgt";
  case Kind::GtU: return "bvugt";
  case Kind::GeS: return "bvsge";
  case Kind::GeU: return "bvuge";
  default: return nullptr;
  }
}

class Encoder {
public:
  std::string decls;
  std::string defs;
  std::vector<std::string> symbols;

  std::string ref(const Node* root) {
    std::vector<std::pair<const Node*, bool>> work{{root, false}};
    while (!work.empty()) {
      auto [n, expanded] = work.back();
      if (names_.count(n)) {
        work.pop_back();
        continue;
      }
      if (!expanded && n->num_children() > 0) {
        work.back().second = true;
        for (unsigned i = 0; i < n->num_children(); ++i)
          if (!names_.count(n->child(i)))
            work.push_back({n->child(i), false});
        continue;
      }
      work.pop_back();
      names_.emplace(n, define(n));
    }
    return names_.at(root);
  }

private:
  std::unordered_map<const Node*, std::string> names_;
  std::unordered_set<std::string> declared_;

  void declare(const std::string& name, const std::string& sort) {
    if (declared_.insert(name).second) {
      decls += "(declare-const " + name + " " + sort + ")\n";
      symbols.push_back(name);
    }
  }

  std::string define(const Node* n) {
    switch (n->kind) {
    case Kind::Const:
      return literal(n->value, n->width);
    case Kind::Sym: {
      std::string s = smt_symbol(n->name, n->side);
      declare(s, sort_of(n));
      return s;
    }
    case Kind::ArrBase: {
      std::string s = array_symbol(n->aux, n->side);
      declare(s, sort_of(n));
      return s;
    }
    default:
      break;
    }
    std::string body = term(n);
    std::string name = "t" + std::to_string(n->id);
    defs += "(define-fun " + name + " () " + sort_of(n) + " " + body + ")\n";
    return name;
  }

  std::string term(const Node* n) {
    auto A = [&] { return names_.at(n->a); };
    auto B = [&] { return names_.at(n->b); };
    unsigned w = n->a->width;
    auto amount = [&] {
      if ((w & (w - 1)) == 0)
        return "(bvand " + B() + " " + literal(w - 1, w) + ")";
      return "(bvurem " + B() + " " + literal(w, w) + ")";
    };
    auto bit = [&](unsigned i) {
      return "(= ((_ extract " + std::to_string(i) + " " + std::to_string(i) + ") " + A() +
             ") #b1)";
    };
    switch (n->kind) {
    case Kind::Shl:
    case Kind::ShrS:
    case Kind::ShrU:
      return std::string("(") + smt_op(n->kind) + " " + A() + " " + amount() + ")";
    case Kind::Rotl:
    case Kind::Rotr: {
      std::string k = amount();
      std::string back = "(bvsub " + literal(w, w) + " " + k + ")";
      const char* first = n->kind == Kind::Rotl ? "bvshl" : "bvlshr";
      const char* second = n->kind == Kind::Rotl ? "bvlshr" : "bvshl";
      return "(bvor (" + std::string(first) + " " + A() + " " + k + ") (" + second + " " + A() +
             " " + back + "))";
    }
    case Kind::Ne:
      return "(ite (= " + A() + " " + B() + ") #b0 #b1)";
    case Kind::Clz: {
      std::string acc = literal(w, w);
      for (unsigned i = 0; i < w; ++i)
        acc = "(ite " + bit(i) + " " + literal(w - 1 - i, w) + " " + acc + ")";
      return acc;
    }
    case Kind::Ctz: {
      std::string acc = literal(w, w);
      for (unsigned i = w; i-- > 0;)
        acc = "(ite " + bit(i) + " " + literal(i, w) + " " + acc + ")";
      return acc;
    }
    case Kind::Popcnt: {
      if (w == 1)
        return A();
      std::string acc = "(bvadd";
      for (unsigned i = 0; i < w; ++i)
        acc += " ((_ zero_extend " + std::to_string(w - 1) + ") ((_ extract " +
               std::to_string(i) + " " + std::to_string(i) + ") " + A() + "))";
      return acc + ")";
    }
    case Kind::ZExt:
      return "((_ zero_extend " + std::to_string(n->width - w) + ") " + A() + ")";
    case Kind::SExt:
      return "((_ sign_extend " + std::to_string(n->width - w) + ") " + A() + ")";
    case Kind::Extract:
      return "((_ extract " + std::to_string(n->aux + n->width - 1) + " " +
             std::to_string(n->aux) + ") " + A() + ")";
    case Kind::Concat:
      return "(concat " + A() + " " + B() + ")";
    case Kind::Ite:
      return "(ite (= " + A() + " #b1) " + B() + " " + names_.at(n->c) + ")";
    case Kind::Select: {
      // Read-over-write on constant store indices becomes an ite chain;
      // array reasoning over long store chains is slow in some backends.
      const Node* arr = n->a;
      std::string head, tail;
      while (arr->kind == Kind::ArrStore && arr->b->kind == Kind::Const) {
        head += "(ite (= " + B() + " " + names_.at(arr->b) + ") " + names_.at(arr->c) + " ";
        tail += ")";
        arr = arr->a;
      }
      return head + "(select " + names_.at(arr) + " " + B() + ")" + tail;
    }
    case Kind::ArrStore:
      return "(store " + A() + " " + B() + " " + names_.at(n->c) + ")";
    default:
      break;
    }
    const char* op = smt_op(n->kind);
    if (!op)
      throw Error("EncodeError", std::string("cannot encode ") + kind_name(n->kind));
    if (is_compare(n->kind))
      return std::string("(ite (") + op + " " + A() + " " + B() + ") #b1 #b0)";
    return std::string("(") + op + " " + A() + " " + B() + ")";
  }
};

} // namespace

std::string smt_symbol(const std::string& name, Side side) {
  std::string s = sanitize(name);
  if (side == Side::L)
    s += "_L";
  else if (side == Side::R)
    s += "_R";
  return s;
}

std::string array_symbol(uint32_t generation, Side side) {
  return smt_symbol("M" + std::to_string(generation), side);
}

std::string encode_smtlib(const QueryFormula& q, std::string* request) {
  Encoder enc;
  std::string asserts;
  for (const Node* a : q.assertions) {
    if (a->width != 1)
      throw WidthMismatch("assertion must have width 1");
    asserts += "(assert (= " + enc.ref(a) + " #b1))\n";
  }
  if (request) {
    // get-model would also print every define-fun, which can be huge.
    if (enc.symbols.empty()) {
      *request = "(get-model)\n";
    } else {
      *request = "(get-value (";
      for (size_t i = 0; i < enc.symbols.size(); ++i)
        *request += (i ? " " : "") + enc.symbols[i];
      *request += "))\n";
    }
  }
  return enc.decls + enc.defs + asserts;
}

std::string smtlib_script(const QueryFormula& q) {
  std::string request;
  std::string body = encode_smtlib(q, &request);
  return "(set-option :produce-models true)\n(set-logic QF_ABV)\n" + body + "(check-sat)\n" +
         request;
}

// ---------------------------------------------------------------------------
// Responses

namespace {

struct SNode {
  bool list = false;
  std::string atom;
  std::vector<SNode> items;
};

// Reads s-expressions; throws MalformedModel on unbalanced input.
class SReader {
public:
  explicit SReader(std::string_view s) : s_(s) {}

  bool next(SNode& out) {
    skip();
    if (p_ >= s_.size())
      return false;
    out = read();
    return true;
  }

private:
  std::string_view s_;
  size_t p_ = 0;

  void skip() {
    while (p_ < s_.size()) {
      char c = s_[p_];
      if (c == ';') {
        while (p_ < s_.size() && s_[p_] != '\n')
          ++p_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++p_;
      } else {
        break;
      }
    }
  }

  SNode read() {
    SNode n;
    if (s_[p_] == '(') {
      ++p_;
      n.list = true;
      for (;;) {
        skip();
        if (p_ >= s_.size())
          throw MalformedModel("unbalanced parentheses in solver output");
        if (s_[p_] == ')') {
          ++p_;
          return n;
        }
        n.items.push_back(read());
      }
    }
    if (s_[p_] == ')')
      throw MalformedModel("unexpected ')' in solver output");
    if (s_[p_] == '"' || s_[p_] == '|') {
      char q = s_[p_++];
      size_t start = p_;
      while (p_ < s_.size() && s_[p_] != q)
        ++p_;
      if (p_ >= s_.size())
        throw MalformedModel("unterminated literal in solver output");
      n.atom = std::string(s_.substr(start, p_ - start));
      ++p_;
      return n;
    }
    size_t start = p_;
    while (p_ < s_.size() && s_[p_] != '(' && s_[p_] != ')' &&
           !std::isspace(static_cast<unsigned char>(s_[p_])))
      ++p_;
    n.atom = std::string(s_.substr(start, p_ - start));
    return n;
  }
};

bool is_atom(const SNode& n, std::string_view a) { return !n.list && n.atom == a; }

std::optional<uint64_t> bv_value(const SNode& n) {
  if (!n.list) {
    const std::string& a = n.atom;
    if (a.size() > 2 && a[0] == '#' && (a[1] == 'x' || a[1] == 'b')) {
      int base = a[1] == 'x' ? 16 : 2;
      uint64_t v = 0;
      for (size_t i = 2; i < a.size(); ++i) {
        char c = a[i];
        int d = (c >= '0' && c <= '9') ? c - '0'
                : (c >= 'a' && c <= 'f') ? c - 'a' + 10
                : (c >= 'A' && c <= 'F') ? c - 'A' + 10
                                         : 99;
        if (d >= base)
          throw MalformedModel("bad bitvector literal " + a);
        v = v * uint64_t(base) + uint64_t(d);
      }
      return v;
    }
    return std::nullopt;
  }
  // (_ bvN w)
  if (n.items.size() == 3 && is_atom(n.items[0], "_") && !n.items[1].list &&
      n.items[1].atom.rfind("bv", 0) == 0) {
    try {
      return std::stoull(n.items[1].atom.substr(2));
    } catch (const std::exception&) {
      throw MalformedModel("bad bitvector literal");
    }
  }
  return std::nullopt;
}

struct FunDef {
  std::string param;
  const SNode* body = nullptr;
};

class ModelReader {
public:
  Model model;
  std::map<std::string, FunDef> funs;
  std::map<std::string, const SNode*> array_defs;

  void add(const SNode& def) {
    // (name value), as answered by get-value
    if (def.list && def.items.size() == 2 && !def.items[0].list) {
      const std::string& name = def.items[0].atom;
      const SNode& value = def.items[1];
      if (auto v = bv_value(value))
        model.values[name] = *v;
      else if (is_atom(value, "true") || is_atom(value, "false"))
        model.values[name] = is_atom(value, "true");
      else
        array_defs[name] = &value;
      return;
    }
    // (define-fun name (params) sort value)
    if (!def.list || def.items.size() != 5 || !is_atom(def.items[0], "define-fun"))
      return; // other model entries (declare-sort, comments) are irrelevant
    const std::string& name = def.items[1].atom;
    const SNode& params = def.items[2];
    const SNode& sort = def.items[3];
    const SNode& value = def.items[4];
    if (!params.list)
      throw MalformedModel("malformed define-fun for " + name);
    if (!params.items.empty()) {
      if (params.items.size() == 1 && params.items[0].list && !params.items[0].items.empty())
        funs[name] = {params.items[0].items[0].atom, &value};
      return;
    }
    bool is_array = sort.list && !sort.items.empty() && is_atom(sort.items[0], "Array");
    if (is_array) {
      array_defs[name] = &value;
      return;
    }
    if (auto v = bv_value(value))
      model.values[name] = *v;
    else if (is_atom(value, "true") || is_atom(value, "false"))
      model.values[name] = is_atom(value, "true");
    // Anything else is one of our own define-funs echoed back.
  }

  void finish() {
    for (const auto& [name, node] : array_defs) {
      try {
        model.arrays[name] = array_value(*node, 0);
      } catch (const MalformedModel&) {
        // Echoed definitions of our own store terms refer to other
        // symbols; only declared arrays matter.
        if (name.rfind("M", 0) == 0)
          throw;
      }
    }
  }

private:
  // Innermost let scope first.
  std::vector<std::map<std::string, const SNode*>> env_;

  const SNode* lookup(const std::string& name) const {
    for (auto it = env_.rbegin(); it != env_.rend(); ++it)
      if (auto f = it->find(name); f != it->end())
        return f->second;
    return nullptr;
  }
  const SNode& resolve(const SNode& n) const {
    if (!n.list)
      if (const SNode* b = lookup(n.atom))
        return *b;
    return n;
  }

  ArrayValue array_value(const SNode& n, int depth) {
    if (depth > 64)
      throw MalformedModel("array value nests too deeply");
    if (!n.list) {
      if (const SNode* bound = lookup(n.atom))
        return array_value(*bound, depth + 1);
      auto it = array_defs.find(n.atom);
      if (it != array_defs.end())
        return array_value(*it->second, depth + 1);
      throw MalformedModel("unknown array value " + n.atom);
    }
    if (n.items.size() == 2 && n.items[0].list && n.items[0].items.size() >= 2 &&
        is_atom(n.items[0].items[0], "as") && is_atom(n.items[0].items[1], "const")) {
      auto v = bv_value(n.items[1]);
      if (!v)
        throw MalformedModel("constant array without a bitvector default");
      ArrayValue a;
      a.fallback = uint8_t(*v);
      return a;
    }
    if (n.items.size() == 3 && is_atom(n.items[0], "let") && n.items[1].list) {
      std::map<std::string, const SNode*> scope;
      for (const SNode& b : n.items[1].items) {
        if (!b.list || b.items.size() != 2 || b.items[0].list)
          throw MalformedModel("malformed let binding");
        scope[b.items[0].atom] = &b.items[1];
      }
      env_.push_back(std::move(scope));
      ArrayValue a = array_value(n.items[2], depth + 1);
      env_.pop_back();
      return a;
    }
    if (n.items.size() == 4 && is_atom(n.items[0], "store")) {
      ArrayValue a = array_value(n.items[1], depth + 1);
      auto i = bv_value(resolve(n.items[2]));
      auto v = bv_value(resolve(n.items[3]));
      if (!i || !v)
        throw MalformedModel("store with non-literal index or value");
      a.entries[uint32_t(*i)] = uint8_t(*v);
      return a;
    }
    if (n.items.size() == 3 && is_atom(n.items[0], "_") && is_atom(n.items[1], "as-array")) {
      auto it = funs.find(n.items[2].atom);
      if (it == funs.end())
        throw MalformedModel("as-array of unknown function " + n.items[2].atom);
      ArrayValue a;
      function_value(*it->second.body, it->second.param, a);
      return a;
    }
    if (n.items.size() == 3 && is_atom(n.items[0], "lambda") && n.items[1].list &&
        n.items[1].items.size() == 1 && n.items[1].items[0].list) {
      ArrayValue a;
      function_value(n.items[2], n.items[1].items[0].items[0].atom, a);
      return a;
    }
    throw MalformedModel("unsupported array value");
  }

  // Collects the indices for which `cond` over `var` holds.
  std::vector<uint32_t> points(const SNode& cond, const std::string& var) {
    if (cond.list && cond.items.size() == 3 && is_atom(cond.items[0], "=")) {
      const SNode* lit = is_atom(cond.items[1], var) ? &cond.items[2]
                         : is_atom(cond.items[2], var) ? &cond.items[1]
                                                       : nullptr;
      if (lit)
        if (auto v = bv_value(*lit))
          return {uint32_t(*v)};
    }
    if (cond.list && !cond.items.empty() && is_atom(cond.items[0], "or")) {
      std::vector<uint32_t> out;
      for (size_t i = 1; i < cond.items.size(); ++i)
        for (uint32_t p : points(cond.items[i], var))
          out.push_back(p);
      return out;
    }
    throw MalformedModel("unsupported array function condition");
  }

  void function_value(const SNode& body, const std::string& var, ArrayValue& a) {
    const SNode* cur = &body;
    std::vector<std::pair<std::vector<uint32_t>, uint8_t>> cases;
    while (cur->list && cur->items.size() == 4 && is_atom(cur->items[0], "ite")) {
      auto v = bv_value(cur->items[2]);
      if (!v)
        throw MalformedModel("array function branch is not a literal");
      cases.push_back({points(cur->items[1], var), uint8_t(*v)});
      cur = &cur->items[3];
    }
    auto d = bv_value(*cur);
    if (!d)
      throw MalformedModel("array function default is not a literal");
    a.fallback = uint8_t(*d);
    // Earlier ite branches take precedence.
    for (auto it = cases.rbegin(); it != cases.rend(); ++it)
      for (uint32_t p : it->first)
        a.entries[p] = it->second;
  }
};

Model read_model(const SNode& root) {
  ModelReader r;
  const SNode* list = &root;
  if (!list->list)
    throw MalformedModel("model is not a list");
  size_t start = 0;
  if (!list->items.empty() && is_atom(list->items[0], "model"))
    start = 1;
  for (size_t i = start; i < list->items.size(); ++i)
    r.add(list->items[i]);
  r.finish();
  return r.model;
}

} // namespace

Model parse_model(std::string_view raw) {
  SReader rd(raw);
  SNode root;
  if (!rd.next(root))
    throw MalformedModel("empty model");
  return read_model(root);
}

SolverAnswer parse_answer(std::string_view raw) {
  SolverAnswer ans;
  SReader rd(raw);
  SNode first;
  try {
    if (!rd.next(first)) {
      ans.status = SolverStatus::Error;
      ans.detail = "no output";
      return ans;
    }
  } catch (const MalformedModel& e) {
    ans.status = SolverStatus::Error;
    ans.detail = e.what();
    return ans;
  }
  if (is_atom(first, "unsat")) {
    ans.status = SolverStatus::Unsat;
  } else if (is_atom(first, "unknown") || is_atom(first, "timeout")) {
    ans.status = SolverStatus::Unknown;
  } else if (is_atom(first, "sat")) {
    SNode m;
    try {
      if (!rd.next(m))
        throw MalformedModel("sat without a model");
      ans.model = read_model(m);
      ans.status = SolverStatus::Sat;
    } catch (const MalformedModel& e) {
      ans.status = SolverStatus::Error;
      ans.detail = std::string("MalformedModel: ") + e.what();
    }
  } else {
    ans.status = SolverStatus::Error;
    ans.detail = std::string(raw.substr(0, 200));
  }
  return ans;
}

// ---------------------------------------------------------------------------
// Configuration

SolverConfig SolverConfig::parse(std::string_view text) {
  SolverConfig cfg;
  bool have_small = false;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#')
      continue;
    size_t colon = line.find(':');
    if (colon == std::string::npos)
      throw Error("ConfigError", "solver config line " + std::to_string(lineno) +
                                     ": expected 'name: command'");
    std::string name = line.substr(b, colon - b);
    while (!name.empty() && (name.back() == ' ' || name.back() == '\t'))
      name.pop_back();
    std::istringstream words(line.substr(colon + 1));
    std::vector<std::string> argv;
    for (std::string w; words >> w;)
      argv.push_back(w);
    if (name == "timeout") {
      cfg.timeout = std::stod(argv.at(0));
      continue;
    }
    if (name == "threshold") {
      cfg.threshold = std::stoul(argv.at(0));
      continue;
    }
    if (name == "jobs") {
      cfg.jobs = std::stoul(argv.at(0));
      continue;
    }
    if (argv.empty())
      throw Error("ConfigError", "solver config line " + std::to_string(lineno) + ": empty command");
    if (!have_small) {
      if (name != "small")
        throw Error("ConfigError", "first solver config entry must be 'small:'");
      cfg.small = {argv[0], argv};
      size_t slash = argv[0].rfind('/');
      if (slash != std::string::npos)
        cfg.small.name = argv[0].substr(slash + 1);
      have_small = true;
      continue;
    }
    cfg.portfolio.push_back({name, argv});
  }
  if (!have_small)
    throw Error("ConfigError", "solver config has no 'small:' entry");
  if (cfg.portfolio.empty())
    cfg.portfolio.push_back(cfg.small);
  return cfg;
}

// Two at least, so a hung backend never blocks the race outright.
size_t SolverConfig::default_jobs() {
  return std::max<size_t>(2, std::thread::hardware_concurrency());
}

SolverConfig SolverConfig::load(const std::string& path) {
  std::ifstream f(path);
  if (!f)
    throw Error("ConfigError", "cannot read solver config " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

SolverConfig SolverConfig::defaults() {
  if (const char* env = std::getenv("RELCT_SOLVER_CONFIG"); env && *env)
    return load(env);
#ifdef RELCT_DEFAULT_SOLVER_CONFIG
  if (std::ifstream(RELCT_DEFAULT_SOLVER_CONFIG))
    return load(RELCT_DEFAULT_SOLVER_CONFIG);
#endif
  return parse("small: z3 -in\n");
}

// ---------------------------------------------------------------------------
// Processes

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

struct Process {
  pid_t pid = -1;
  int in = -1;  // child's stdin
  int out = -1; // child's stdout

  bool start(const std::vector<std::string>& argv) {
    static bool sigpipe_ignored = [] {
      signal(SIGPIPE, SIG_IGN);
      return true;
    }();
    (void)sigpipe_ignored;
    int pin[2], pout[2];
    if (pipe2(pin, O_CLOEXEC) != 0)
      return false;
    if (pipe2(pout, O_CLOEXEC) != 0) {
      ::close(pin[0]);
      ::close(pin[1]);
      return false;
    }
    posix_spawn_file_actions_t fa;
    posix_spawn_file_actions_init(&fa);
    posix_spawn_file_actions_adddup2(&fa, pin[0], 0);
    posix_spawn_file_actions_adddup2(&fa, pout[1], 1);
    posix_spawn_file_actions_addopen(&fa, 2, "/dev/null", O_WRONLY, 0);
    posix_spawnattr_t attr;
    posix_spawnattr_init(&attr);
    posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP);
    posix_spawnattr_setpgroup(&attr, 0);
    std::vector<char*> args;
    for (const auto& a : argv)
      args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);
    int rc = posix_spawnp(&pid, args[0], &fa, &attr, args.data(), environ);
    posix_spawn_file_actions_destroy(&fa);
    posix_spawnattr_destroy(&attr);
    ::close(pin[0]);
    ::close(pout[1]);
    if (rc != 0) {
      ::close(pin[1]);
      ::close(pout[0]);
      pid = -1;
      return false;
    }
    in = pin[1];
    out = pout[0];
    fcntl(in, F_SETFL, fcntl(in, F_GETFL) | O_NONBLOCK);
    fcntl(out, F_SETFL, fcntl(out, F_GETFL) | O_NONBLOCK);
    return true;
  }

  void close_in() {
    if (in >= 0)
      ::close(in);
    in = -1;
  }

  void kill() {
    close_in();
    if (out >= 0)
      ::close(out);
    out = -1;
    if (pid > 0) {
      ::kill(-pid, SIGKILL);
      ::kill(pid, SIGKILL);
      waitpid(pid, nullptr, 0);
    }
    pid = -1;
  }

  // Drains the child's stdout; returns false on EOF.
  bool read_some(std::string& buf) {
    char tmp[65536];
    for (;;) {
      ssize_t n = ::read(out, tmp, sizeof tmp);
      if (n > 0) {
        buf.append(tmp, size_t(n));
        continue;
      }
      if (n == 0)
        return false;
      if (errno == EINTR)
        continue;
      return true; // EAGAIN
    }
  }

  // Writes as much of data[off..] as the pipe takes.
  bool write_some(const std::string& data, size_t& off) {
    while (off < data.size()) {
      ssize_t n = ::write(in, data.data() + off, data.size() - off);
      if (n > 0) {
        off += size_t(n);
        continue;
      }
      if (n < 0 && errno == EINTR)
        continue;
      if (n < 0 && errno == EAGAIN)
        return true;
      return false;
    }
    return true;
  }
};

int remaining_ms(Clock::time_point deadline) {
  auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
  return left.count() < 0 ? 0 : int(left.count());
}

} // namespace

// The small backend: one long-lived process, reset before each query. A
// marker echo delimits each response.
struct Solver::Interactive {
  SolverCommand cmd;
  Process proc;
  bool started = false;

  ~Interactive() { proc.kill(); }

  bool ensure() {
    if (started)
      return true;
    if (!proc.start(cmd.argv))
      return false;
    started = true;
    return true;
  }

  void reset() {
    proc.kill();
    started = false;
  }

  bool send(const std::string& data, Clock::time_point deadline) {
    size_t off = 0;
    while (off < data.size()) {
      if (!proc.write_some(data, off))
        return false;
      if (off < data.size()) {
        pollfd p{proc.in, POLLOUT, 0};
        if (poll(&p, 1, remaining_ms(deadline)) <= 0)
          return false;
      }
    }
    return true;
  }

  // Reads until a line equal to `marker`; returns the text before it.
  std::optional<std::string> read_until(const std::string& marker, Clock::time_point deadline) {
    std::string buf;
    for (;;) {
      size_t pos = buf.find(marker + "\n");
      if (pos != std::string::npos && (pos == 0 || buf[pos - 1] == '\n'))
        return buf.substr(0, pos);
      pollfd p{proc.out, POLLIN, 0};
      int rc = poll(&p, 1, remaining_ms(deadline));
      if (rc <= 0)
        return std::nullopt;
      if (!proc.read_some(buf)) {
        if (buf.find(marker + "\n") == std::string::npos)
          return std::nullopt;
      }
    }
  }
};

Solver::Solver(SolverConfig cfg) : cfg_(std::move(cfg)), small_(new Interactive) {
  small_->cmd = cfg_.small;
}

Solver::~Solver() = default;

SolverAnswer Solver::dispatch(const QueryFormula& q) {
  // Debug aid: echo every dispatched script.
  if (const char* dump = std::getenv("RELCT_DUMP_SMT"); dump && *dump == '1')
    std::fprintf(stderr, "; query %s, %zu nodes\n%s", query_kind_name(q.kind), q.expr_count,
                 smtlib_script(q).c_str());
  if (q.expr_count > cfg_.threshold)
    return run_portfolio(q);
  return run_small(q);
}

SolverAnswer Solver::run_small(const QueryFormula& q) {
  auto t0 = Clock::now();
  auto deadline = t0 + std::chrono::milliseconds(int64_t(cfg_.timeout * 1000));
  SolverAnswer ans;
  ans.responder = cfg_.small.name;
  auto fail = [&](SolverStatus s, const std::string& why) {
    small_->reset();
    ans.status = s;
    ans.detail = why;
    ans.elapsed = seconds_since(t0);
    return ans;
  };
  if (small_->cmd != cfg_.small) {
    small_->reset();
    small_->cmd = cfg_.small;
  }
  if (!small_->ensure())
    return fail(SolverStatus::Error, "cannot start " + cfg_.small.name);
  static const std::string marker = "relct-end";
  std::string request;
  // (reset) rather than push/pop: under push z3 drops to its incremental
  // core, which is far slower on wide bit-vector arithmetic.
  std::string text = "(reset)\n(set-option :produce-models true)\n"
                     "(set-option :print-success false)\n(set-logic QF_ABV)\n" +
                     encode_smtlib(q, &request) + "(check-sat)\n(echo \"" + marker + "\")\n";
  if (!small_->send(text, deadline))
    return fail(SolverStatus::Timeout, "write timed out");
  auto status = small_->read_until(marker, deadline);
  if (!status)
    return fail(Clock::now() >= deadline ? SolverStatus::Timeout : SolverStatus::Error,
                "no answer");
  std::string st = *status;
  while (!st.empty() && std::isspace(static_cast<unsigned char>(st.back())))
    st.pop_back();
  while (!st.empty() && std::isspace(static_cast<unsigned char>(st.front())))
    st.erase(st.begin());
  if (st == "sat") {
    if (!small_->send(request + "(echo \"" + marker + "\")\n", deadline))
      return fail(SolverStatus::Timeout, "write timed out");
    auto model = small_->read_until(marker, deadline);
    if (!model)
      return fail(SolverStatus::Timeout, "model timed out");
    try {
      ans.model = parse_model(*model);
      ans.status = SolverStatus::Sat;
    } catch (const MalformedModel& e) {
      return fail(SolverStatus::Error, std::string("MalformedModel: ") + e.what());
    }
  } else if (st == "unsat") {
    ans.status = SolverStatus::Unsat;
  } else if (st == "unknown") {
    ans.status = SolverStatus::Unknown;
  } else {
    return fail(SolverStatus::Error, st.substr(0, 200));
  }
  ans.elapsed = seconds_since(t0);
  return ans;
}

SolverAnswer Solver::run_portfolio(const QueryFormula& q) {
  auto t0 = Clock::now();
  auto deadline = t0 + std::chrono::milliseconds(int64_t(cfg_.timeout * 1000));
  std::string script = smtlib_script(q);

  struct Worker {
    const SolverCommand* cmd;
    Process proc;
    size_t written = 0;
    std::string output;
    bool done = false;
  };
  std::vector<Worker> workers;
  workers.reserve(cfg_.portfolio.size());
  for (const SolverCommand& c : cfg_.portfolio) {
    Worker w;
    w.cmd = &c;
    workers.push_back(std::move(w));
  }
  // At most `jobs` workers run at once; the rest start, in config order, as
  // running ones finish without a definitive answer.
  size_t next = 0, running = 0;
  auto top_up = [&] {
    while (running < std::max<size_t>(1, cfg_.jobs) && next < workers.size()) {
      Worker& w = workers[next++];
      if (w.proc.start(w.cmd->argv))
        ++running;
      else
        w.done = true;
    }
  };
  top_up();

  SolverAnswer result;
  result.portfolio = true;
  result.status = SolverStatus::Error;
  result.detail = "no backend answered";
  bool any_timeout = false;
  std::optional<SolverAnswer> winner;

  while (!winner) {
    std::vector<pollfd> fds;
    std::vector<std::pair<size_t, bool>> owners; // worker, is_write
    for (size_t i = 0; i < next; ++i) {
      Worker& w = workers[i];
      if (w.done)
        continue;
      if (w.proc.in >= 0) {
        fds.push_back({w.proc.in, POLLOUT, 0});
        owners.push_back({i, true});
      }
      fds.push_back({w.proc.out, POLLIN, 0});
      owners.push_back({i, false});
    }
    if (fds.empty())
      break;
    int ms = remaining_ms(deadline);
    if (ms == 0) {
      any_timeout = true;
      break;
    }
    int rc = poll(fds.data(), fds.size(), ms);
    if (rc < 0 && errno == EINTR)
      continue;
    if (rc <= 0) {
      any_timeout = true;
      break;
    }
    for (size_t k = 0; k < fds.size() && !winner; ++k) {
      if (!fds[k].revents)
        continue;
      Worker& w = workers[owners[k].first];
      if (w.done)
        continue;
      if (owners[k].second) {
        if (!w.proc.write_some(script, w.written) || w.written == script.size())
          w.proc.close_in();
        continue;
      }
      if (w.proc.read_some(w.output))
        continue;
      // EOF: the worker has said everything it will say.
      w.done = true;
      --running;
      SolverAnswer a = parse_answer(w.output);
      a.responder = w.cmd->name;
      a.portfolio = true;
      if (a.status == SolverStatus::Sat || a.status == SolverStatus::Unsat) {
        winner = a;
      } else {
        result.status = a.status;
        result.detail = w.cmd->name + ": " + (a.detail.empty() ? status_name(a.status) : a.detail);
        result.responder = w.cmd->name;
      }
    }
    if (!winner)
      top_up();
  }
  for (Worker& w : workers)
    w.proc.kill();
  if (winner) {
    winner->elapsed = seconds_since(t0);
    return *winner;
  }
  if (any_timeout) {
    result.status = SolverStatus::Timeout;
    result.detail = "portfolio timed out";
  }
  result.elapsed = seconds_since(t0);
  return result;
}

} // namespace relct

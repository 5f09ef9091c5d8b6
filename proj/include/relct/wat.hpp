#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "relct/ast.hpp"

namespace relct::wat {

// Parses one WAT text. The text may hold several `(module ...)` forms plus
// top-level `(public ...)`, `(secret ...)` and `(symb_exec ...)` forms; all
// of them are linked into one ModuleAst and validated.
ModuleAst parse_module(std::string_view source);

// Same as parse_module over a set of files forming one module set.
ModuleAst parse_modules(const std::vector<std::string>& sources);

// Stack typing, index resolution and policy checks. parse_module already
// calls this; exposed for ASTs built by hand.
void validate(const ModuleAst& ast);

// Renders the AST as flat-form WAT that parse_module accepts.
std::string print_module(const ModuleAst& ast);

// `l...` labels are public and `h...` labels secret. Throws SyntaxError
// for anything else.
Secrecy classify_label(std::string_view label, SourceLoc loc = {});

struct ResolvedEntry {
  uint32_t func_index = 0;
  const FuncDef* func = nullptr;
  EntrySpec entry;
};

ResolvedEntry resolve_entry(const ModuleAst& ast);

// Assigns module-unique instruction ids in pre-order. parse_module calls it.
void number_instructions(ModuleAst& ast);

} // namespace relct::wat

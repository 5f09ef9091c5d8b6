#pragma once

#include <set>
#include <vector>

#include "relct/engine.hpp"

namespace relct {

// Locals of the loop's frame assigned in the body, plus globals assigned in
// the body or in any function reachable from it.
std::set<Slot> syntactic_modified(const ModuleAst& ast, const Instr& loop);

// Summarises one loop. `header` has the loop label on top with nothing of
// the body executed yet. Returns the states leaving the loop.
std::vector<SymState> analyze_loop(Engine& engine, const SymState& header, const Instr& loop);

} // namespace relct

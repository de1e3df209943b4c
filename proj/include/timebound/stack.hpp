#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "timebound/cfg.hpp"
#include "timebound/machine.hpp"
#include "timebound/value.hpp"

namespace timebound {

struct FunctionStack {
    Addr entry = 0;
    std::int64_t local_depth = 0; // bytes below SP at entry, incl. pushed return addresses
    std::int64_t total_depth = 0; // local plus deepest callee chain
};

struct StackResult {
    std::vector<FunctionStack> functions; // sorted by entry address
    std::int64_t global_bound = 0;        // bytes below stack_init
    std::vector<Addr> witness;            // call chain attaining the bound
};

// Worst-case stack usage from the SP intervals of value analysis, composed
// bottom-up over the (acyclic) call graph. Refuses when SP is unknown at any
// reachable point or when the call graph has a cycle.
StackResult analyze_stack(const Program& prog, const ValueResults& vr, const MachineConfig& mcfg);

} // namespace timebound

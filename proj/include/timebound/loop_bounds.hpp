#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "timebound/cfg.hpp"
#include "timebound/value.hpp"

namespace timebound {

struct LoopBound {
    Addr header = 0;             // address of the loop header block
    std::int64_t bound = 0;      // max header executions per loop entry
    enum class Source { Derived, Annotated } source = Source::Derived;
};

// Derives a bound for simple counted loops: exactly one instruction in the
// body writes the counter and it is ADDI r,r,c (c != 0) on a block that
// dominates every back edge; the header terminator compares the counter
// against a register the body never writes. Returns nothing when the loop
// does not match.
std::optional<std::int64_t> derive_loop_bound(const Program& prog, const FunctionCfg& f,
                                              const Loop& loop, const ValueResults& vr);

// Derived bounds merged with annotations. Annotated values win; a warning is
// emitted when an annotation exceeds a derived (already safe) bound. Every
// loop must end up bounded or the analysis refuses.
std::vector<LoopBound> resolve_bounds(const Program& prog, const ValueResults& vr,
                                      const std::map<Addr, std::int64_t>& annotated,
                                      std::vector<std::string>& warnings);

} // namespace timebound

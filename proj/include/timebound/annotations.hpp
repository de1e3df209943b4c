#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "timebound/machine.hpp"

namespace timebound {

// Line-based annotation file. `#` comments; keys: entry, input, loopbound,
// callee_bound, icache, dcache, stack_init, penalty_i, penalty_d. Unknown
// keys are errors.
struct Annotations {
    std::optional<Addr> entry;
    std::map<int, std::pair<std::int32_t, std::int32_t>> inputs;
    std::map<Addr, std::int64_t> loop_bounds;
    std::map<Addr, std::int64_t> callee_bounds;
    std::optional<CacheConfig> icache;
    std::optional<CacheConfig> dcache;
    std::optional<Addr> stack_init;
    std::optional<int> penalty_i;
    std::optional<int> penalty_d;

    MachineConfig apply(MachineConfig base) const;
};

Annotations parse_annotations(const std::string& text);
Annotations read_annotations(const std::string& path);

} // namespace timebound

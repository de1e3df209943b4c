#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "timebound/cfg.hpp"
#include "timebound/machine.hpp"
#include "timebound/timing.hpp"
#include "timebound/value.hpp"

namespace timebound {

// Abstract set-associative LRU cache.
//
// must: per set, block -> upper bound on its LRU age. A block present in
// must is cached in every concrete state reachable here, no deeper than the
// bound. may: per set, block -> lower bound on its age; a block absent from
// may is cached in no reachable state. Ages run 0..assoc-1; a bound reaching
// assoc evicts the entry.
struct AbstractCache {
    CacheConfig cfg;
    std::vector<std::map<std::uint32_t, int>> must;
    std::vector<std::map<std::uint32_t, int>> may;

    AbstractCache() = default;
    explicit AbstractCache(const CacheConfig& c) : cfg(c), must(c.sets), may(c.sets) {}

    bool operator==(const AbstractCache&) const = default;
    void check_invariant() const; // must subset of may, min-age <= max-age
};

// Access to exactly one memory block.
void acache_update(AbstractCache& c, std::uint32_t block);
// Access to one unknown block out of a candidate set: must ages every
// possibly-touched set without inserting; may inserts every candidate.
void acache_update_range(AbstractCache& c, const std::vector<std::uint32_t>& blocks);

AbstractCache acache_join(const AbstractCache& a, const AbstractCache& b);

AccessClass acache_classify(const AbstractCache& c, std::uint32_t block);

struct Classification {
    std::map<Addr, AccessClass> fetch; // every reachable instruction
    std::map<Addr, AccessClass> data;  // reachable LD/ST/CALL/RET

    AccessClass fetch_at(Addr a) const;
    AccessClass data_at(Addr a) const;
};

struct BlockCacheState {
    AbstractCache icache;
    AbstractCache dcache;
    bool reached = false;
};

struct CacheResults {
    Classification cls;
    std::map<int, BlockCacheState> block_entry;
};

// Fixpoint over the interprocedural CFG from a cold entry state (must and
// may both empty: nothing is cached, so first accesses classify AM).
// Value-infeasible edges are skipped.
CacheResults classify(const Program& prog, const ValueResults& vr, const MachineConfig& mcfg);

// Candidate blocks of a data access: the access reads 4 bytes starting
// anywhere in addrs.
std::vector<std::uint32_t> access_blocks(const CacheConfig& cfg, const Interval& addrs,
                                         std::uint32_t mem_size);

} // namespace timebound

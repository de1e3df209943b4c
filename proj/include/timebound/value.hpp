#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "timebound/cfg.hpp"
#include "timebound/machine.hpp"

namespace timebound {

// Range of signed 32-bit values, kept in 64-bit bounds. Empty iff lo > hi.
struct Interval {
    std::int64_t lo = 1;
    std::int64_t hi = 0;

    static constexpr std::int64_t kMin = -2147483648LL;
    static constexpr std::int64_t kMax = 2147483647LL;

    static Interval bottom() { return {1, 0}; }
    static Interval top() { return {kMin, kMax}; }
    static Interval of(std::int64_t lo, std::int64_t hi) { return lo > hi ? bottom() : Interval{lo, hi}; }
    static Interval singleton(std::int64_t v) { return {v, v}; }

    bool is_bottom() const { return lo > hi; }
    bool is_top() const { return !is_bottom() && lo == kMin && hi == kMax; }
    bool is_singleton() const { return lo == hi; }
    bool contains(std::int64_t v) const { return !is_bottom() && lo <= v && v <= hi; }
    bool subsumes(const Interval& o) const { return o.is_bottom() || (!is_bottom() && lo <= o.lo && o.hi <= hi); }
    std::int64_t width() const { return is_bottom() ? 0 : hi - lo + 1; }

    bool operator==(const Interval&) const = default;
    std::string str() const;
};

// Transfer arithmetic for ADD/SUB/MUL/AND/OR/SHL/SHR. Any corner outside the
// signed 32-bit range means wrap-around is possible and the result is top.
Interval interval_apply(Op op, Interval a, Interval b);
Interval interval_join(Interval a, Interval b);
Interval interval_meet(Interval a, Interval b);
// Threshold widening over T = {-2^31, -1, 0, 1, 255, 65535, 2^31-1}.
Interval interval_widen(Interval older, Interval newer);

// Register and tracked-memory state at a program point. Absent cells are
// top. Only cells written through singleton addresses are tracked.
struct AbstractStore {
    std::array<Interval, kNumRegs> regs{};
    std::map<Addr, Interval> cells;
    bool bottom = true;

    static AbstractStore top_store();
    Interval cell(Addr a) const;
    bool operator==(const AbstractStore&) const = default;
};

AbstractStore store_join(const AbstractStore& a, const AbstractStore& b);
AbstractStore store_widen(const AbstractStore& older, const AbstractStore& newer);

// Address range of one data access (width 4). kind is 'D' for all of
// LD/ST/CALL/RET; instruction fetches are implicit singleton 'I' accesses.
struct AccessRange {
    Addr at = 0;
    char kind = 'D';
    Interval addrs;
};

struct TransferOut {
    AbstractStore store;
    std::optional<AccessRange> access;
    std::vector<std::string> warnings;
};

TransferOut transfer(const Instruction& in, const AbstractStore& s, const MachineConfig& mcfg);

// Stores narrowed by the branch outcome. An empty narrowed interval makes
// the whole store bottom, i.e. the edge is infeasible.
std::pair<AbstractStore, AbstractStore> refine_branch(const Instruction& in, const AbstractStore& s);

struct ValueResults {
    std::map<int, AbstractStore> edge_stores;                 // propagation edges
    std::map<int, AbstractStore> block_in;                    // joined block entry
    std::map<Addr, std::array<Interval, kNumRegs>> instr_pre; // reachable instructions
    std::set<int> infeasible_edges;                           // edge ids, every kind
    std::map<Addr, AccessRange> accesses;                     // reachable memory instructions
    std::vector<std::string> warnings;

    bool reachable(int block) const {
        auto it = block_in.find(block);
        return it != block_in.end() && !it->second.bottom;
    }
    Interval reg_before(Addr a, int reg) const;
};

// Worklist fixpoint over the interprocedural CFG (call/return edges
// included, context-insensitive). Entry store: SP = stack_init, annotated
// input registers get their ranges, everything else top. Widening at
// retreating-edge targets after two visits, then one narrowing pass.
ValueResults analyze_values(const Program& prog, const MachineConfig& mcfg,
                            const std::map<int, std::pair<std::int32_t, std::int32_t>>& inputs);

struct JrResolution {
    std::map<Addr, std::vector<Addr>> targets;
    std::set<Addr> unresolved; // reachable JR whose target set is unknown or too big
};

// Target sets for JR sites: every 4-aligned member of the register's
// interval when that set has at most 64 members inside the code region.
JrResolution resolve_indirect_jumps(const Program& prog, const ValueResults& vr);

} // namespace timebound

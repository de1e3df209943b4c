#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "timebound/isa.hpp"
#include "timebound/machine.hpp"

namespace timebound {

// One cache access as it happened: the address of the instruction that
// caused it, I (fetch) or D (data), and the outcome.
struct AccessEvent {
    Addr at = 0;
    char kind = 'I';
    bool hit = false;
};

struct DynEvent {
    Addr addr = 0;
    Op op = Op::Halt;
    std::uint64_t done_cycle = 0;
    bool i_hit = false;
    bool has_d = false;
    bool d_hit = false;
    Addr sp_after = 0;
};

struct Trace {
    std::uint64_t total_cycles = 0;
    std::uint32_t max_stack_depth = 0; // bytes below stack_init
    // (instruction addr, register) -> set of values seen just before executing it
    std::map<Addr, std::array<std::set<std::int32_t>, kNumRegs>> observations;
    std::vector<AccessEvent> access_log;
    std::vector<Addr> exec_path; // executed instruction addresses, in order
    std::vector<DynEvent> events;
    bool halted = false;

    // Lines `CYCLE <n> ADDR <hex> <mnemonic> I:<hit|miss> [D:<hit|miss>] SP=<hex>`
    std::string to_text() const;
};

constexpr std::uint64_t kDefaultCycleBudget = 10'000'000;

// Execute the image with concrete LRU caches and the shared two-stage timing
// recurrence. inputs may assign r0..r14; everything else starts at zero.
// Traps (misalignment, out-of-range access, decode failure, exhausted
// budget) throw TrapError naming the faulting address.
Trace run(const ProgramImage& image, const MachineConfig& mcfg,
          const std::map<int, std::int32_t>& inputs,
          std::uint64_t cycle_budget = kDefaultCycleBudget);

enum class MergedAccess { EveryRunHit, EveryRunMiss, Mixed };

struct ExhaustiveResult {
    std::uint64_t max_cycles = 0;
    std::uint32_t max_stack_depth = 0;
    std::map<Addr, std::array<std::set<std::int32_t>, kNumRegs>> observations;
    std::map<std::pair<Addr, char>, MergedAccess> access_classes;
    std::uint64_t runs = 0;
};

// Runs every input combination of the given inclusive ranges and aggregates.
// The domain product is capped at 2^20 combinations.
ExhaustiveResult exhaustive_run(const ProgramImage& image, const MachineConfig& mcfg,
                                const std::map<int, std::pair<std::int32_t, std::int32_t>>& domain,
                                std::uint64_t cycle_budget = kDefaultCycleBudget);

} // namespace timebound

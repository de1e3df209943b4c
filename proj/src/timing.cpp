#include "timebound/timing.hpp"

#include <algorithm>

#include "timebound/errors.hpp"

namespace timebound {

const char* access_class_name(AccessClass c) {
    switch (c) {
    case AccessClass::AlwaysHit: return "AH";
    case AccessClass::AlwaysMiss: return "AM";
    case AccessClass::NotClassified: return "NC";
    }
    return "?";
}

int fetch_latency(bool icache_miss, const MachineConfig& mcfg) {
    return 1 + (icache_miss ? mcfg.penalty_i() : 0);
}

int exec_latency(const Instruction& in, bool taken, bool dcache_miss, const MachineConfig& mcfg) {
    int d = dcache_miss ? mcfg.penalty_d() : 0;
    switch (in.op) {
    case Op::Halt:
        return 1;
    case Op::Movi:
    case Op::Add:
    case Op::Sub:
    case Op::Addi:
    case Op::And:
    case Op::Or:
    case Op::Shl:
    case Op::Shr:
        return 1;
    case Op::Mul:
        return mcfg.mul_cycles;
    case Op::Ld:
    case Op::St:
        return 2 + d;
    case Op::Beq:
    case Op::Bne:
    case Op::Blt:
    case Op::Bge:
        return taken ? 1 + mcfg.taken_flush : 1;
    case Op::Jmp:
    case Op::Jr:
        return 1 + mcfg.taken_flush;
    case Op::Call:
    case Op::Ret:
        return 1 + mcfg.taken_flush + 2 + d;
    }
    throw InternalError("exec_latency: unhandled instruction kind");
}

InstrTimes instruction_times(const Instruction& in, AccessClass fetch_class, AccessClass mem_class,
                             const MachineConfig& mcfg, BranchTiming branch) {
    bool i_miss = fetch_class != AccessClass::AlwaysHit;
    bool d_miss = mem_class != AccessClass::AlwaysHit;
    bool taken = true;
    if (in.is_branch() && branch == BranchTiming::NotTakenOnly) taken = false;
    return InstrTimes{fetch_latency(i_miss, mcfg), exec_latency(in, taken, d_miss, mcfg)};
}

std::int64_t block_contribution(const std::vector<InstrTimes>& times, std::int64_t backlog) {
    std::int64_t fetch_done = 0;
    std::int64_t exec_done = backlog;
    for (const auto& t : times) {
        fetch_done += t.fetch_time;
        exec_done = std::max(fetch_done, exec_done) + t.exec_time;
    }
    return exec_done - backlog;
}

std::int64_t block_wcet(const std::vector<InstrTimes>& times) {
    return block_contribution(times, 0);
}

std::int64_t block_wcet(const std::vector<Instruction>& instrs, const ClassLookup& classes,
                        const MachineConfig& mcfg, BranchTiming branch) {
    std::vector<InstrTimes> times;
    times.reserve(instrs.size());
    for (const auto& in : instrs) {
        AccessClass f = AccessClass::NotClassified;
        AccessClass m = AccessClass::NotClassified;
        classes(in, f, m);
        times.push_back(instruction_times(in, f, m, mcfg, branch));
    }
    return block_wcet(times);
}

} // namespace timebound

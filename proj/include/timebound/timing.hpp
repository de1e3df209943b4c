#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "timebound/isa.hpp"
#include "timebound/machine.hpp"

namespace timebound {

// Access classifications produced by cache analysis. NotClassified is timed
// as a miss; the timing model is monotone in every latency, so that is safe.
enum class AccessClass { AlwaysHit, AlwaysMiss, NotClassified };

const char* access_class_name(AccessClass c);

// ---------------------------------------------------------------------------
// The machine's timing model. One definition shared by the concrete simulator
// and the per-block bound so the two cannot drift apart.
//
// Two overlapped stages, fetch and execute:
//   fetch_start(1) = 0
//   fetch_done(i)  = fetch_start(i) + fetch_time(i)
//   fetch_start(i+1) = fetch_done(i), except after a taken control transfer,
//                      where fetch restarts at exec_done(i)
//   exec_done(0)   = 0
//   exec_start(i)  = max(fetch_done(i), exec_done(i-1))
//   exec_done(i)   = exec_start(i) + exec_time(i)
//
// fetch_time = 1 + p_i on an instruction-cache miss.
// exec_time: ALU/MOVI 1; MUL mul_cycles; not-taken branch 1; taken
// branch/JMP/JR 1+taken_flush; LD/ST 2 (+p_d on a data-cache miss);
// CALL/RET 1+taken_flush+2 (+p_d); HALT 1.

int fetch_latency(bool icache_miss, const MachineConfig& mcfg);
int exec_latency(const Instruction& instr, bool taken, bool dcache_miss, const MachineConfig& mcfg);

// How to time the final branch of a block when computing its bound.
// Worst uses the taken variant (never smaller than not-taken); the one-sided
// modes apply when value analysis proved the other edge infeasible.
enum class BranchTiming { Worst, TakenOnly, NotTakenOnly };

struct InstrTimes {
    int fetch_time = 0;
    int exec_time = 0;
};

InstrTimes instruction_times(const Instruction& instr, AccessClass fetch_class,
                             AccessClass mem_class, const MachineConfig& mcfg,
                             BranchTiming branch = BranchTiming::Worst);

struct BlockTime {
    int block = -1;
    std::int64_t wcet_cycles = 0;
};

// Upper bound on the block's cycle contribution, assuming an empty pipeline
// at block start. Starting empty is the worst case: any fetch backlog
// carried in can only hide fetch latency (the carry-in pessimism property,
// exercised by tests).
std::int64_t block_wcet(const std::vector<InstrTimes>& times);

using ClassLookup = std::function<void(const Instruction&, AccessClass& fetch, AccessClass& mem)>;

std::int64_t block_wcet(const std::vector<Instruction>& instrs, const ClassLookup& classes,
                        const MachineConfig& mcfg, BranchTiming branch = BranchTiming::Worst);

// Recurrence with an explicit carry-in backlog: exec_done(0) = backlog,
// fetch_start(1) = 0. Returns exec_done(n) - backlog. Test hook for the
// carry-in pessimism property.
std::int64_t block_contribution(const std::vector<InstrTimes>& times, std::int64_t backlog);

} // namespace timebound

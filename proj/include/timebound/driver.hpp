#pragma once

#include <map>
#include <string>

#include "timebound/annotations.hpp"
#include "timebound/cache.hpp"
#include "timebound/cfg.hpp"
#include "timebound/ipet.hpp"
#include "timebound/loop_bounds.hpp"
#include "timebound/stack.hpp"
#include "timebound/value.hpp"

namespace timebound {

struct AnalysisOptions {
    bool wcet = true;
    bool stack = true;
};

struct AnalysisResult {
    MachineConfig mcfg;
    Program prog;
    ValueResults vr;
    std::vector<LoopBound> bounds;
    CacheResults cache;
    std::map<int, std::int64_t> block_times; // block id -> own cycle bound
    WcetResult wcet;
    StackResult stack;
    std::vector<std::string> warnings;
    bool has_wcet = false;
    bool has_stack = false;
};

// Full phase pipeline: CFG building (with indirect-jump refinement rounds
// against value analysis), value analysis, loop bounds, stack bounds, cache
// classification, per-block timing, and ILP path analysis.
AnalysisResult analyze_program(const ProgramImage& image, const Annotations& ann,
                               const AnalysisOptions& opts = {});

BlockTime timed_block(const Program& prog, const ValueResults& vr, const CacheResults& cache,
                      const MachineConfig& mcfg, const BasicBlock& b);

} // namespace timebound

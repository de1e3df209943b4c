#include "timebound/driver.hpp"

#include "timebound/errors.hpp"

namespace timebound {

namespace {

constexpr int kJrRefinementRounds = 8;

BranchTiming branch_mode(const Program& prog, const ValueResults& vr, const BasicBlock& b) {
    if (b.term != Terminator::Branch) return BranchTiming::Worst;
    bool taken_dead = false, nottaken_dead = false;
    for (int eid : prog.out_edges[b.id]) {
        const Edge& e = prog.edges[eid];
        if (e.kind == EdgeKind::Taken) taken_dead = vr.infeasible_edges.count(eid) > 0;
        if (e.kind == EdgeKind::NotTaken) nottaken_dead = vr.infeasible_edges.count(eid) > 0;
    }
    if (taken_dead && !nottaken_dead) return BranchTiming::NotTakenOnly;
    if (nottaken_dead && !taken_dead) return BranchTiming::TakenOnly;
    return BranchTiming::Worst;
}

} // namespace

BlockTime timed_block(const Program& prog, const ValueResults& vr, const CacheResults& cache,
                      const MachineConfig& mcfg, const BasicBlock& b) {
    std::int64_t cycles = block_wcet(
        b.instrs,
        [&](const Instruction& in, AccessClass& fetch, AccessClass& mem) {
            fetch = cache.cls.fetch_at(in.addr);
            mem = in.is_memory() ? cache.cls.data_at(in.addr) : AccessClass::AlwaysHit;
        },
        mcfg, branch_mode(prog, vr, b));
    return {b.id, cycles};
}

AnalysisResult analyze_program(const ProgramImage& image, const Annotations& ann,
                               const AnalysisOptions& opts) {
    AnalysisResult res;
    res.mcfg = ann.apply(MachineConfig{});

    // CFG building and value analysis alternate until indirect jumps stop
    // changing the graph.
    std::map<Addr, std::vector<Addr>> jr_map;
    for (int round = 0;; round++) {
        res.prog = build_cfg(image, ann.entry, jr_map);
        res.vr = analyze_values(res.prog, res.mcfg, ann.inputs);
        JrResolution jr = resolve_indirect_jumps(res.prog, res.vr);
        if (jr.targets == jr_map || round >= kJrRefinementRounds) {
            for (Addr a : jr.unresolved)
                if (res.vr.instr_pre.count(a))
                    throw AnalysisError("unresolvable indirect jump at " + to_hex(a));
            if (!(jr.targets == jr_map))
                throw AnalysisError("indirect jump resolution did not stabilize");
            break;
        }
        jr_map = std::move(jr.targets);
    }
    for (auto& w : res.vr.warnings) res.warnings.push_back(w);

    call_order_bottom_up(res.prog); // refuse recursion before any composition

    if (opts.stack) {
        res.stack = analyze_stack(res.prog, res.vr, res.mcfg);
        res.has_stack = true;
    }

    if (opts.wcet) {
        for (auto& f : res.prog.funcs) {
            if (ann.callee_bounds.count(f.entry_addr) && f.index != res.prog.entry_func) continue;
            compute_dominators(res.prog, f);
            find_natural_loops(res.prog, f); // refuses irreducible control flow
        }
        res.bounds = resolve_bounds(res.prog, res.vr, ann.loop_bounds, res.warnings);
        for (const auto& [addr, cycles] : ann.callee_bounds)
            res.warnings.push_back("trusted annotation: callee_bound " + to_hex(addr) + " " +
                                   std::to_string(cycles));

        res.cache = classify(res.prog, res.vr, res.mcfg);
        for (const auto& b : res.prog.blocks) {
            BlockTime bt = timed_block(res.prog, res.vr, res.cache, res.mcfg, b);
            res.block_times[bt.block] = bt.wcet_cycles;
        }
        res.wcet = program_wcet(res.prog, res.block_times, res.bounds, res.vr.infeasible_edges,
                                ann.callee_bounds);
        res.has_wcet = true;
    }
    return res;
}

} // namespace timebound

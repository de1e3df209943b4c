#include "doctest.h"

#include <cstdio>
#include <random>

#include "timebound/corpus.hpp"
#include "timebound/driver.hpp"
#include "timebound/report.hpp"
#include "timebound/sim.hpp"

#include "oracles.hpp"

using namespace timebound;

namespace {

struct FixtureData {
    Fixture fx;
    AnalysisResult res;
    ExhaustiveResult oracle;
    std::set<std::pair<Addr, Addr>> transitions;         // union over all runs
    std::map<Addr, std::int64_t> observed_header_execs;  // per loop header, max per entry
};

// Max header executions per loop entry in one run.
void fold_header_execs(const Program& prog, const Trace& t, std::map<Addr, std::int64_t>& out) {
    for (const auto& f : prog.funcs) {
        for (const auto& loop : f.loops) {
            Addr header = prog.blocks[loop.header].start;
            std::int64_t best = 0, cur = 0;
            Addr prev = 0;
            bool have_prev = false;
            for (Addr a : t.exec_path) {
                if (prog.block_starts.count(a) == 0) continue;
                int blk = prog.block_starts.at(a);
                if (blk == loop.header) {
                    bool from_inside = have_prev && loop.body.count(prog.block_containing(prev));
                    cur = from_inside ? cur + 1 : 1;
                    best = std::max(best, cur);
                }
                prev = a;
                have_prev = true;
            }
            auto it = out.find(header);
            if (it == out.end()) out[header] = best;
            else it->second = std::max(it->second, best);
        }
    }
}

const std::vector<FixtureData>& harness() {
    static std::vector<FixtureData> data = [] {
        std::vector<FixtureData> out;
        for (auto& fx : load_corpus(CORPUS_DIR)) {
            FixtureData fd;
            fd.fx = fx;
            fd.res = analyze_program(fx.image, fx.ann);
            MachineConfig mcfg = fx.ann.apply(MachineConfig{});
            fd.oracle = exhaustive_run(fx.image, mcfg, fx.ann.inputs);

            // Per-run collection for transitions and loop-iteration counts.
            std::vector<std::map<int, std::int32_t>> points{{}};
            for (const auto& [r, range] : fx.ann.inputs) {
                std::vector<std::map<int, std::int32_t>> next;
                for (const auto& base : points)
                    for (std::int64_t v = range.first; v <= range.second; v++) {
                        auto p = base;
                        p[r] = static_cast<std::int32_t>(v);
                        next.push_back(p);
                    }
                points = std::move(next);
            }
            for (const auto& inputs : points) {
                Trace t = run(fx.image, mcfg, inputs);
                for (std::size_t i = 0; i + 1 < t.exec_path.size(); i++)
                    fd.transitions.insert({t.exec_path[i], t.exec_path[i + 1]});
                fold_header_execs(fd.res.prog, t, fd.observed_header_execs);
            }
            out.push_back(std::move(fd));
        }
        return out;
    }();
    return data;
}

struct Criterion {
    std::string id;
    std::vector<std::string> failures;

    explicit Criterion(std::string name) : id(std::move(name)) {}
    void expect(bool ok, const std::string& what) {
        if (!ok) failures.push_back(what);
    }
    void finish() {
        std::printf("ACCEPTANCE %s: %s\n", id.c_str(), failures.empty() ? "PASS" : "FAIL");
        for (const auto& f : failures) std::printf("  violation: %s\n", f.c_str());
        std::fflush(stdout);
        CHECK(failures.empty());
    }
};

} // namespace

TEST_CASE("criterion 1: WCET soundness against exhaustive simulation") {
    Criterion c("1 wcet-soundness");
    for (const auto& fd : harness())
        c.expect(fd.oracle.max_cycles <= static_cast<std::uint64_t>(fd.res.wcet.global_wcet),
                 fd.fx.name + ": oracle " + std::to_string(fd.oracle.max_cycles) + " > bound " +
                     std::to_string(fd.res.wcet.global_wcet));
    c.finish();
}

TEST_CASE("criterion 2: WCET exactness on single-path fixtures") {
    Criterion c("2 wcet-exactness");
    int covered = 0;
    for (const auto& fd : harness()) {
        if (!fd.fx.single_path) continue;
        covered++;
        c.expect(fd.oracle.max_cycles == static_cast<std::uint64_t>(fd.res.wcet.global_wcet),
                 fd.fx.name + ": oracle " + std::to_string(fd.oracle.max_cycles) + " != bound " +
                     std::to_string(fd.res.wcet.global_wcet));
    }
    c.expect(covered >= 2, "fewer than two single-path fixtures");
    c.finish();
}

TEST_CASE("criterion 3: WCET precision on branching and loop fixtures") {
    Criterion c("3 wcet-precision");
    for (const auto& fd : harness()) {
        double ratio = static_cast<double>(fd.res.wcet.global_wcet) /
                       static_cast<double>(fd.oracle.max_cycles);
        std::printf("  ratio %-12s bound=%lld oracle=%llu -> %.3f (limit %.2f)\n",
                    fd.fx.name.c_str(), static_cast<long long>(fd.res.wcet.global_wcet),
                    static_cast<unsigned long long>(fd.oracle.max_cycles), ratio, fd.fx.max_ratio);
        c.expect(ratio <= fd.fx.max_ratio,
                 fd.fx.name + ": ratio " + std::to_string(ratio) + " exceeds " +
                     std::to_string(fd.fx.max_ratio));
    }
    c.finish();
}

TEST_CASE("criterion 4: stack soundness and exactness") {
    Criterion c("4 stack-bounds");
    for (const auto& fd : harness()) {
        c.expect(fd.oracle.max_stack_depth <= static_cast<std::uint64_t>(fd.res.stack.global_bound),
                 fd.fx.name + ": oracle stack " + std::to_string(fd.oracle.max_stack_depth) +
                     " > bound " + std::to_string(fd.res.stack.global_bound));
        if (fd.fx.stack_exact)
            c.expect(fd.oracle.max_stack_depth ==
                         static_cast<std::uint64_t>(fd.res.stack.global_bound),
                     fd.fx.name + ": oracle stack " + std::to_string(fd.oracle.max_stack_depth) +
                         " != bound " + std::to_string(fd.res.stack.global_bound));
    }
    c.finish();
}

TEST_CASE("criterion 5: every observed register value lies in its interval") {
    Criterion c("5 value-soundness");
    long checked = 0;
    for (const auto& fd : harness()) {
        for (const auto& [addr, per_reg] : fd.oracle.observations) {
            auto pre = fd.res.vr.instr_pre.find(addr);
            if (pre == fd.res.vr.instr_pre.end()) {
                c.expect(false, fd.fx.name + ": executed " + to_hex(addr) + " deemed unreachable");
                continue;
            }
            for (int r = 0; r < kNumRegs; r++) {
                const Interval& iv = pre->second[r];
                for (std::int32_t v : per_reg[r]) {
                    checked++;
                    if (!iv.contains(v)) {
                        c.expect(false, fd.fx.name + ": " + register_name(r) + "=" +
                                            std::to_string(v) + " outside " + iv.str() + " at " +
                                            to_hex(addr));
                        break;
                    }
                }
            }
        }
    }
    std::printf("  checked %ld observation points\n", checked);
    c.expect(checked > 1000, "too few observations for a meaningful check");
    c.finish();
}

TEST_CASE("criterion 6: AH always hits, AM always misses") {
    Criterion c("6 cache-classification");
    long enforced = 0;
    for (const auto& fd : harness()) {
        auto check_kind = [&](const std::map<Addr, AccessClass>& cls, char kind) {
            for (const auto& [addr, cl] : cls) {
                auto it = fd.oracle.access_classes.find({addr, kind});
                if (it == fd.oracle.access_classes.end()) continue; // never executed
                if (cl == AccessClass::AlwaysHit) {
                    enforced++;
                    c.expect(it->second == MergedAccess::EveryRunHit,
                             fd.fx.name + ": AH access at " + to_hex(addr) + std::string(1, kind) +
                                 " missed in some run");
                } else if (cl == AccessClass::AlwaysMiss) {
                    enforced++;
                    c.expect(it->second == MergedAccess::EveryRunMiss,
                             fd.fx.name + ": AM access at " + to_hex(addr) + std::string(1, kind) +
                                 " hit in some run");
                }
            }
        };
        check_kind(fd.res.cache.cls.fetch, 'I');
        check_kind(fd.res.cache.cls.data, 'D');
    }
    std::printf("  enforced %ld classified access points\n", enforced);
    c.expect(enforced > 50, "too few classified accesses for a meaningful check");
    c.finish();
}

TEST_CASE("criterion 7: no run crosses an infeasible edge") {
    Criterion c("7 infeasible-edges");
    for (const auto& fd : harness()) {
        const Program& prog = fd.res.prog;
        for (const auto& [a, b] : fd.transitions) {
            int ba = prog.block_containing(a);
            if (b == a + 4 && prog.block_starts.count(b) == 0) continue; // inside a block
            bool any_edge = false;
            bool any_feasible = false;
            for (int eid : prog.out_edges[ba]) {
                const Edge& e = prog.edges[eid];
                if (prog.blocks[e.src].last_addr() != a || prog.blocks[e.dst].start != b) continue;
                any_edge = true;
                if (!fd.res.vr.infeasible_edges.count(eid)) any_feasible = true;
            }
            c.expect(any_edge, fd.fx.name + ": transition " + to_hex(a) + "->" + to_hex(b) +
                                   " has no edge");
            c.expect(!any_edge || any_feasible, fd.fx.name + ": run crossed infeasible edge " +
                                                    to_hex(a) + "->" + to_hex(b));
        }
        int intraproc_infeasible = 0;
        for (const auto& e : prog.edges)
            if (is_intraproc(e.kind) && fd.res.vr.infeasible_edges.count(e.id)) intraproc_infeasible++;
        c.expect(intraproc_infeasible >= fd.fx.expect_infeasible,
                 fd.fx.name + ": expected at least " + std::to_string(fd.fx.expect_infeasible) +
                     " infeasible edges, found " + std::to_string(intraproc_infeasible));
    }
    c.finish();
}

TEST_CASE("criterion 8: abstract cache brackets every concrete LRU position") {
    Criterion c("8 cache-domain-conformance");
    auto stats = test_oracles::run_cache_conformance(10000, 2024);
    std::printf("  %ld randomized cases\n", stats.cases);
    c.expect(stats.cases == 10000, "case count mismatch");
    c.expect(stats.failures == 0, std::to_string(stats.failures) + " bracketing violations");
    c.finish();
}

TEST_CASE("criterion 9: interval arithmetic contains every concrete result") {
    Criterion c("9 interval-conformance");
    long failures = test_oracles::interval_conformance_failures(8);
    c.expect(failures == 0, std::to_string(failures) + " containment violations");
    c.finish();
}

TEST_CASE("criterion 10: flow model optimum equals path enumeration") {
    Criterion c("10 ilp-correctness");
    int compared = 0;
    for (const auto& fd : harness()) {
        const Program& prog = fd.res.prog;
        for (const auto& f : prog.funcs) {
            bool has_loops = !f.loops.empty();
            std::int64_t worst_bound = 0;
            for (const auto& loop : f.loops)
                for (const auto& lb : fd.res.bounds)
                    if (lb.header == prog.blocks[loop.header].start)
                        worst_bound = std::max(worst_bound, lb.bound);
            if (f.blocks.size() > 12) continue;
            if (has_loops && worst_bound > 10 && fd.fx.name != "countedloop") continue;

            // Callee-inclusive block times, exactly as the solver sees them.
            std::map<int, std::int64_t> times;
            for (int bid : f.blocks) {
                std::int64_t t = fd.res.block_times.at(bid);
                if (prog.blocks[bid].term == Terminator::Call) {
                    Addr site = prog.blocks[bid].last().addr;
                    for (const auto& cg : prog.callgraph)
                        if (cg.call_site == site) t += fd.res.wcet.function_wcet.at(cg.callee);
                }
                times[bid] = t;
            }
            std::map<int, std::int64_t> zero_callees;
            for (const auto& cg : prog.callgraph) zero_callees[cg.callee] = 0;
            FunctionModel fm = build_ilp(prog, f, times, fd.res.bounds, fd.res.vr.infeasible_edges,
                                         zero_callees);
            IlpSolution sol = solve_ilp(fm.model);
            if (sol.status != SolveStatus::Optimal) {
                c.expect(false, fd.fx.name + ": model not optimal");
                continue;
            }
            test_oracles::PathOracle oracle{prog, f, times, fd.res.bounds,
                                            fd.res.vr.infeasible_edges};
            std::int64_t path_best = oracle.run();
            compared++;
            c.expect(sol.value.num() == path_best,
                     fd.fx.name + "/" + to_hex(f.entry_addr) + ": solver " +
                         std::to_string(sol.value.num()) + " != paths " + std::to_string(path_best));
            c.expect(sol.value.num() == fd.res.wcet.function_wcet.at(f.index),
                     fd.fx.name + "/" + to_hex(f.entry_addr) + ": rebuilt model disagrees with "
                                                               "the reported per-function bound");
        }
    }
    std::printf("  compared %d function models\n", compared);
    c.expect(compared >= 10, "too few models compared");
    c.finish();
}

TEST_CASE("criterion 11: carry-in pessimism and penalty monotonicity") {
    Criterion c("11 timing-lemma");
    std::mt19937 rng(2025);
    long lemma_violations = 0;
    for (int trial = 0; trial < 10000; trial++) {
        int n = 1 + static_cast<int>(rng() % 10);
        std::vector<InstrTimes> ts;
        for (int i = 0; i < n; i++)
            ts.push_back({1 + static_cast<int>(rng() % 12), 1 + static_cast<int>(rng() % 12)});
        std::int64_t base = block_contribution(ts, 0);
        for (std::int64_t backlog : {std::int64_t(1), std::int64_t(rng() % 51)})
            if (block_contribution(ts, backlog) > base) lemma_violations++;
    }
    c.expect(lemma_violations == 0,
             std::to_string(lemma_violations) + " carry-in pessimism violations");

    long mono_violations = 0;
    for (int trial = 0; trial < 1000; trial++) {
        std::string src;
        int n = 2 + static_cast<int>(rng() % 10);
        for (int i = 0; i < n; i++) {
            switch (rng() % 5) {
            case 0: src += "ADD r1,r2,r3\n"; break;
            case 1: src += "MUL r4,r1,r1\n"; break;
            case 2: src += "MOVI r5,3\n"; break;
            case 3: src += "ST r1,[r0+" + std::to_string(256 + (rng() % 64) * 4) + "]\n"; break;
            case 4: src += "LD r6,[r0+" + std::to_string(256 + (rng() % 64) * 4) + "]\n"; break;
            }
        }
        src += "HALT\n";
        ProgramImage image = assemble(src);
        MachineConfig low;
        low.icache.penalty = static_cast<int>(rng() % 10);
        low.dcache.penalty = static_cast<int>(rng() % 10);
        MachineConfig high = low;
        high.icache.penalty += static_cast<int>(rng() % 10);
        high.dcache.penalty += static_cast<int>(rng() % 10);
        if (run(image, low, {}).total_cycles > run(image, high, {}).total_cycles) mono_violations++;
    }
    c.expect(mono_violations == 0, std::to_string(mono_violations) + " monotonicity violations");
    c.finish();
}

TEST_CASE("criterion 12: byte-identical reports across repeated runs") {
    Criterion c("12 determinism");
    for (const auto& fd : harness()) {
        AnalysisResult again = analyze_program(fd.fx.image, fd.fx.ann);
        c.expect(emit_report(fd.res) == emit_report(again), fd.fx.name + ": report differs");
        c.expect(emit_all_dot(fd.res) == emit_all_dot(again), fd.fx.name + ": DOT differs");
    }
    c.finish();
}

TEST_CASE("loop bounds dominate observed iteration counts") {
    // Companion to criteria 1 and 3: per-entry header executions never exceed
    // the resolved bound on any run.
    Criterion c("loop-bound-soundness");
    for (const auto& fd : harness()) {
        for (const auto& [header, observed] : fd.observed_header_execs) {
            std::int64_t bound = -1;
            for (const auto& lb : fd.res.bounds)
                if (lb.header == header) bound = lb.bound;
            c.expect(bound >= 0, fd.fx.name + ": loop at " + to_hex(header) + " has no bound");
            c.expect(observed <= bound, fd.fx.name + ": observed " + std::to_string(observed) +
                                            " executions at " + to_hex(header) + " exceed bound " +
                                            std::to_string(bound));
        }
    }
    c.finish();
}

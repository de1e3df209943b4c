#include "timebound/loop_bounds.hpp"

#include <algorithm>

#include "timebound/errors.hpp"

namespace timebound {

namespace {

constexpr std::int64_t kIterationCap = 1 << 22;

int written_register(const Instruction& in) {
    switch (in.op) {
    case Op::Movi:
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Addi:
    case Op::And:
    case Op::Or:
    case Op::Shl:
    case Op::Shr:
    case Op::Ld:
        return in.rd;
    case Op::Call:
    case Op::Ret:
        return kStackPointer;
    default:
        return -1;
    }
}

bool dominates(const FunctionCfg& f, int a, int b) {
    int x = b;
    while (true) {
        if (x == a) return true;
        auto it = f.idom.find(x);
        if (it == f.idom.end() || it->second == x) return a == x;
        x = it->second;
    }
}

// Continue condition of the branch, evaluated on concrete counter/limit
// values, oriented so that "true" follows the in-loop edge.
bool continue_holds(Op branch, bool counter_is_rs1, bool in_loop_is_taken,
                    std::int64_t counter, std::int64_t limit) {
    std::int64_t a = counter_is_rs1 ? counter : limit;
    std::int64_t b = counter_is_rs1 ? limit : counter;
    bool taken;
    switch (branch) {
    case Op::Beq: taken = a == b; break;
    case Op::Bne: taken = a != b; break;
    case Op::Blt: taken = a < b; break;
    case Op::Bge: taken = a >= b; break;
    default: return false;
    }
    return in_loop_is_taken ? taken : !taken;
}

// Counts header executions for one concrete (init, limit) pair by running
// the counter recurrence. increments_before_test is true when the ADDI sits
// in the header block itself, ahead of the branch.
std::optional<std::int64_t> count_header_execs(Op branch, bool counter_is_rs1, bool in_loop_is_taken,
                                               bool increments_before_test, std::int64_t step,
                                               std::int64_t init, std::int64_t limit) {
    std::int64_t r = init;
    auto bump = [&]() {
        r += step;
        return r >= Interval::kMin && r <= Interval::kMax; // wrap-around breaks the recurrence
    };
    for (std::int64_t k = 1; k <= kIterationCap; k++) {
        if (increments_before_test && !bump()) return std::nullopt;
        if (!continue_holds(branch, counter_is_rs1, in_loop_is_taken, r, limit)) return k;
        if (!increments_before_test && !bump()) return std::nullopt;
    }
    return std::nullopt;
}

} // namespace

std::optional<std::int64_t> derive_loop_bound(const Program& prog, const FunctionCfg& f,
                                              const Loop& loop, const ValueResults& vr) {
    const BasicBlock& header = prog.blocks[loop.header];
    if (header.term != Terminator::Branch) return std::nullopt;
    const Instruction& br = header.last();
    if (br.rs1 == br.rs2) return std::nullopt;

    // The branch must have one successor inside the loop and one outside.
    int taken_dst = -1, nottaken_dst = -1;
    for (int eid : f.edges) {
        const Edge& e = prog.edges[eid];
        if (e.src != loop.header) continue;
        if (e.kind == EdgeKind::Taken) taken_dst = e.dst;
        if (e.kind == EdgeKind::NotTaken) nottaken_dst = e.dst;
    }
    if (taken_dst < 0 || nottaken_dst < 0) return std::nullopt;
    bool taken_in = loop.body.count(taken_dst) > 0;
    bool nottaken_in = loop.body.count(nottaken_dst) > 0;
    if (taken_in == nottaken_in) return std::nullopt; // no exit or no continuation

    // Equality-driven exits: only the plain while(r != n) shape qualifies;
    // a BEQ-governed exit derives nothing.
    if (br.op == Op::Beq) return std::nullopt;
    if (br.op == Op::Bne && !taken_in) return std::nullopt;

    // Candidate counter: a branch operand written exactly once in the body,
    // by ADDI r,r,c, on a block that runs on every trip around the loop.
    auto qualify = [&](int reg) -> std::optional<std::pair<std::int64_t, int>> {
        const Instruction* addi = nullptr;
        int addi_block = -1;
        for (int bid : loop.body) {
            for (const auto& in : prog.blocks[bid].instrs) {
                if (written_register(in) != reg) continue;
                if (addi) return std::nullopt; // second writer
                if (in.op != Op::Addi || in.rs1 != reg || in.imm == 0) return std::nullopt;
                addi = &in;
                addi_block = bid;
            }
        }
        if (!addi) return std::nullopt;
        // Exactly once per trip: the increment must run on every path back to
        // the header and must not sit inside a nested loop.
        for (int src : loop.back_edge_srcs)
            if (!dominates(f, addi_block, src)) return std::nullopt;
        for (const auto& inner : f.loops)
            if (inner.header != loop.header && loop.body.count(inner.header) &&
                inner.body.count(addi_block))
                return std::nullopt;
        return std::make_pair(static_cast<std::int64_t>(addi->imm), addi_block);
    };

    auto c1 = qualify(br.rs1);
    auto c2 = qualify(br.rs2);
    if (static_cast<bool>(c1) == static_cast<bool>(c2)) return std::nullopt; // none or ambiguous
    bool counter_is_rs1 = static_cast<bool>(c1);
    std::int64_t step = counter_is_rs1 ? c1->first : c2->first;
    int addi_block = counter_is_rs1 ? c1->second : c2->second;
    int counter = counter_is_rs1 ? br.rs1 : br.rs2;
    int limit = counter_is_rs1 ? br.rs2 : br.rs1;

    // The limit register must be loop-invariant.
    for (int bid : loop.body)
        for (const auto& in : prog.blocks[bid].instrs)
            if (written_register(in) == limit) return std::nullopt;

    // Intervals on the loop-entry edges. With no explicit entry edge the
    // header is the function entry; fall back to its pre-state there.
    Interval init_iv = Interval::bottom();
    Interval limit_iv = Interval::bottom();
    auto entries = loop_entry_edges(prog, f, loop);
    for (int eid : entries) {
        auto it = vr.edge_stores.find(eid);
        if (it == vr.edge_stores.end() || it->second.bottom) continue;
        init_iv = interval_join(init_iv, it->second.regs[counter]);
        limit_iv = interval_join(limit_iv, it->second.regs[limit]);
    }
    if (entries.empty()) {
        init_iv = vr.reg_before(header.start, counter);
        limit_iv = vr.reg_before(header.start, limit);
    }
    if (init_iv.is_bottom() || limit_iv.is_bottom()) return std::nullopt; // loop never entered
    if (init_iv.is_top() || limit_iv.is_top()) return std::nullopt;

    bool increments_before_test = addi_block == loop.header;

    if (br.op == Op::Bne) {
        // Equality tests need exact values and exact divisibility.
        if (!init_iv.is_singleton() || !limit_iv.is_singleton()) return std::nullopt;
        std::int64_t diff = limit_iv.lo - init_iv.lo;
        if (diff % step != 0) return std::nullopt;
    }

    std::int64_t worst = 0;
    for (std::int64_t init : {init_iv.lo, init_iv.hi}) {
        for (std::int64_t lim : {limit_iv.lo, limit_iv.hi}) {
            auto k = count_header_execs(br.op, counter_is_rs1, taken_in, increments_before_test,
                                        step, init, lim);
            if (!k) return std::nullopt;
            worst = std::max(worst, *k);
        }
    }
    return worst;
}

std::vector<LoopBound> resolve_bounds(const Program& prog, const ValueResults& vr,
                                      const std::map<Addr, std::int64_t>& annotated,
                                      std::vector<std::string>& warnings) {
    std::vector<LoopBound> out;
    std::set<Addr> known_headers;
    for (const auto& f : prog.funcs) {
        for (const auto& loop : f.loops) {
            Addr header = prog.blocks[loop.header].start;
            known_headers.insert(header);
            auto derived = derive_loop_bound(prog, f, loop, vr);
            auto ann = annotated.find(header);
            if (ann != annotated.end()) {
                if (derived && ann->second > *derived)
                    warnings.push_back("annotated bound " + std::to_string(ann->second) + " at " +
                                       to_hex(header) + " exceeds derived bound " +
                                       std::to_string(*derived));
                warnings.push_back("trusted annotation: loopbound " + to_hex(header) + " " +
                                   std::to_string(ann->second));
                out.push_back({header, ann->second, LoopBound::Source::Annotated});
            } else if (derived) {
                out.push_back({header, *derived, LoopBound::Source::Derived});
            } else {
                throw AnalysisError("unbounded loop at " + to_hex(header));
            }
        }
    }
    for (const auto& [header, bound] : annotated) {
        (void)bound;
        if (!known_headers.count(header))
            warnings.push_back("annotation names no loop header: loopbound " + to_hex(header));
    }
    return out;
}

} // namespace timebound

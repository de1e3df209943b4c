#include "timebound/value.hpp"

#include <algorithm>
#include <deque>

#include "timebound/errors.hpp"

namespace timebound {

std::string Interval::str() const {
    if (is_bottom()) return "[]";
    if (is_top()) return "[T]";
    return "[" + std::to_string(lo) + "," + std::to_string(hi) + "]";
}

namespace {

constexpr std::int64_t kWidenThresholds[] = {Interval::kMin, -1, 0, 1, 255, 65535, Interval::kMax};

Interval hull_or_top(std::int64_t lo, std::int64_t hi) {
    if (lo < Interval::kMin || hi > Interval::kMax) return Interval::top();
    return Interval::of(lo, hi);
}

// Logical shift right of one signed 32-bit value, as the machine does it.
std::int64_t shr_concrete(std::int64_t x, int k) {
    return static_cast<std::int64_t>(static_cast<std::uint32_t>(static_cast<std::int32_t>(x)) >> k);
}

Interval shl_by(Interval a, int k) {
    // Multiply instead of shifting: bounds may be negative. |a|*2^k <= 2^62.
    std::int64_t f = std::int64_t{1} << k;
    return hull_or_top(a.lo * f, a.hi * f);
}

Interval shr_by(Interval a, int k) {
    if (k == 0) return a;
    if (a.lo >= 0) return Interval::of(a.lo >> k, a.hi >> k);
    // Negative operands reinterpret as large unsigned values; cover the
    // whole non-negative result range of this shift amount.
    return Interval::of(0, shr_concrete(-1, k));
}

bool singleton_low_mask(Interval v, std::int64_t& mask) {
    if (!v.is_singleton() || v.lo < 0) return false;
    std::int64_t m = v.lo;
    if ((m & (m + 1)) != 0) return false; // 2^k - 1 shapes only
    mask = m;
    return true;
}

} // namespace

Interval interval_apply(Op op, Interval a, Interval b) {
    if (a.is_bottom() || b.is_bottom()) return Interval::bottom();
    switch (op) {
    case Op::Add:
    case Op::Addi:
        return hull_or_top(a.lo + b.lo, a.hi + b.hi);
    case Op::Sub:
        return hull_or_top(a.lo - b.hi, a.hi - b.lo);
    case Op::Mul: {
        std::int64_t c[] = {a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi};
        return hull_or_top(*std::min_element(c, c + 4), *std::max_element(c, c + 4));
    }
    case Op::And: {
        if (a.is_singleton() && b.is_singleton())
            return Interval::singleton(static_cast<std::int32_t>(a.lo) & static_cast<std::int32_t>(b.lo));
        std::int64_t mask;
        if (singleton_low_mask(a, mask) || singleton_low_mask(b, mask))
            return Interval::of(0, mask);
        return Interval::top();
    }
    case Op::Or:
        if (a.is_singleton() && b.is_singleton())
            return Interval::singleton(static_cast<std::int32_t>(a.lo) | static_cast<std::int32_t>(b.lo));
        return Interval::top();
    case Op::Shl:
    case Op::Shr: {
        if (b.width() > 32) return Interval::top();
        Interval out = Interval::bottom();
        for (std::int64_t s = b.lo; s <= b.hi; s++) {
            int k = static_cast<int>(s & 31);
            Interval part = op == Op::Shl ? shl_by(a, k) : shr_by(a, k);
            out = interval_join(out, part);
            if (out.is_top()) break;
        }
        return out;
    }
    default:
        throw InternalError("interval_apply: not an ALU operator");
    }
}

Interval interval_join(Interval a, Interval b) {
    if (a.is_bottom()) return b;
    if (b.is_bottom()) return a;
    return Interval::of(std::min(a.lo, b.lo), std::max(a.hi, b.hi));
}

Interval interval_meet(Interval a, Interval b) {
    if (a.is_bottom() || b.is_bottom()) return Interval::bottom();
    return Interval::of(std::max(a.lo, b.lo), std::min(a.hi, b.hi));
}

Interval interval_widen(Interval older, Interval newer) {
    if (older.is_bottom()) return newer;
    if (newer.is_bottom()) return older;
    std::int64_t lo = older.lo;
    std::int64_t hi = older.hi;
    if (newer.lo < lo) {
        lo = Interval::kMin;
        for (std::int64_t t : kWidenThresholds)
            if (t <= newer.lo) lo = std::max(lo, t);
    }
    if (newer.hi > hi) {
        hi = Interval::kMax;
        std::int64_t best = Interval::kMax;
        for (std::int64_t t : kWidenThresholds)
            if (t >= newer.hi) best = std::min(best, t);
        hi = best;
    }
    return Interval::of(lo, hi);
}

AbstractStore AbstractStore::top_store() {
    AbstractStore s;
    s.bottom = false;
    s.regs.fill(Interval::top());
    return s;
}

Interval AbstractStore::cell(Addr a) const {
    auto it = cells.find(a);
    return it == cells.end() ? Interval::top() : it->second;
}

AbstractStore store_join(const AbstractStore& a, const AbstractStore& b) {
    if (a.bottom) return b;
    if (b.bottom) return a;
    AbstractStore out;
    out.bottom = false;
    for (int r = 0; r < kNumRegs; r++) out.regs[r] = interval_join(a.regs[r], b.regs[r]);
    for (const auto& [addr, iv] : a.cells) {
        auto it = b.cells.find(addr);
        if (it == b.cells.end()) continue; // tracked on one side only -> top
        Interval j = interval_join(iv, it->second);
        if (!j.is_top()) out.cells[addr] = j;
    }
    return out;
}

AbstractStore store_widen(const AbstractStore& older, const AbstractStore& newer) {
    if (older.bottom) return newer;
    if (newer.bottom) return older;
    AbstractStore out;
    out.bottom = false;
    for (int r = 0; r < kNumRegs; r++) out.regs[r] = interval_widen(older.regs[r], newer.regs[r]);
    for (const auto& [addr, iv] : older.cells) {
        auto it = newer.cells.find(addr);
        if (it == newer.cells.end()) continue;
        Interval w = interval_widen(iv, it->second);
        if (!w.is_top()) out.cells[addr] = w;
    }
    return out;
}

TransferOut transfer(const Instruction& in, const AbstractStore& s, const MachineConfig& mcfg) {
    if (s.bottom) throw InternalError("transfer over a bottom store");
    TransferOut out;
    out.store = s;
    auto& st = out.store;
    const std::int64_t mem_max = static_cast<std::int64_t>(mcfg.mem_size) - 1;

    auto clamp_to_memory = [&](Interval addrs) {
        return interval_meet(addrs, Interval::of(0, mem_max));
    };
    auto invalidate_overlapping = [&](Interval addrs) {
        for (auto it = st.cells.begin(); it != st.cells.end();) {
            std::int64_t c = it->first;
            if (!addrs.is_bottom() && c >= addrs.lo && c <= addrs.hi) it = st.cells.erase(it);
            else ++it;
        }
    };
    auto sp_check = [&](const char* what) {
        const Interval& sp = st.regs[kStackPointer];
        if (!sp.is_bottom() && (sp.lo < 0 || sp.hi > mem_max))
            out.warnings.push_back(std::string("stack pointer range ") + sp.str() + " leaves memory after " +
                                   what + " at " + to_hex(in.addr));
    };

    switch (in.op) {
    case Op::Halt:
    case Op::Jmp:
    case Op::Jr:
        break;
    case Op::Movi:
        st.regs[in.rd] = Interval::singleton(in.imm);
        break;
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::And:
    case Op::Or:
    case Op::Shl:
    case Op::Shr:
        st.regs[in.rd] = interval_apply(in.op, st.regs[in.rs1], st.regs[in.rs2]);
        if (in.rd == kStackPointer) sp_check(mnemonic(in.op));
        break;
    case Op::Addi:
        st.regs[in.rd] = interval_apply(Op::Add, st.regs[in.rs1], Interval::singleton(in.imm));
        if (in.rd == kStackPointer) sp_check("ADDI");
        break;
    case Op::Ld: {
        Interval addrs = interval_apply(Op::Add, st.regs[in.rs1], Interval::singleton(in.imm));
        addrs = clamp_to_memory(addrs);
        out.access = AccessRange{in.addr, 'D', addrs};
        if (addrs.is_singleton() && st.cells.count(static_cast<Addr>(addrs.lo)))
            st.regs[in.rd] = st.cells.at(static_cast<Addr>(addrs.lo));
        else
            st.regs[in.rd] = Interval::top();
        if (in.rd == kStackPointer) sp_check("LD");
        break;
    }
    case Op::St: {
        Interval addrs = interval_apply(Op::Add, st.regs[in.rs1], Interval::singleton(in.imm));
        addrs = clamp_to_memory(addrs);
        out.access = AccessRange{in.addr, 'D', addrs};
        if (addrs.is_singleton()) {
            Interval v = st.regs[in.rd];
            if (v.is_top()) st.cells.erase(static_cast<Addr>(addrs.lo));
            else st.cells[static_cast<Addr>(addrs.lo)] = v;
        } else {
            invalidate_overlapping(addrs.is_bottom() ? Interval::of(0, mem_max) : addrs);
        }
        break;
    }
    case Op::Call: {
        st.regs[kStackPointer] = interval_apply(Op::Sub, st.regs[kStackPointer], Interval::singleton(4));
        sp_check("CALL");
        Interval sp = clamp_to_memory(st.regs[kStackPointer]);
        out.access = AccessRange{in.addr, 'D', sp};
        if (sp.is_singleton())
            st.cells[static_cast<Addr>(sp.lo)] = Interval::singleton(in.next_addr());
        else
            invalidate_overlapping(sp.is_bottom() ? Interval::of(0, mem_max) : sp);
        break;
    }
    case Op::Ret: {
        Interval sp = clamp_to_memory(st.regs[kStackPointer]);
        out.access = AccessRange{in.addr, 'D', sp};
        st.regs[kStackPointer] = interval_apply(Op::Add, st.regs[kStackPointer], Interval::singleton(4));
        sp_check("RET");
        break;
    }
    case Op::Beq:
    case Op::Bne:
    case Op::Blt:
    case Op::Bge:
        break;
    }
    return out;
}

namespace {

Interval trim_value(Interval a, std::int64_t v) {
    if (a.is_bottom()) return a;
    if (a.is_singleton() && a.lo == v) return Interval::bottom();
    if (a.lo == v) return Interval::of(a.lo + 1, a.hi);
    if (a.hi == v) return Interval::of(a.lo, a.hi - 1);
    return a;
}

void refine_eq(Interval& a, Interval& b) {
    Interval m = interval_meet(a, b);
    a = m;
    b = m;
}

void refine_ne(Interval& a, Interval& b) {
    if (b.is_singleton()) a = trim_value(a, b.lo);
    if (a.is_singleton()) b = trim_value(b, a.lo);
}

// a < b
void refine_lt(Interval& a, Interval& b) {
    Interval na = interval_meet(a, Interval::of(Interval::kMin, b.hi - 1));
    Interval nb = interval_meet(b, Interval::of(a.lo + 1, Interval::kMax));
    a = na;
    b = nb;
}

// a >= b
void refine_ge(Interval& a, Interval& b) {
    Interval na = interval_meet(a, Interval::of(b.lo, Interval::kMax));
    Interval nb = interval_meet(b, Interval::of(Interval::kMin, a.hi));
    a = na;
    b = nb;
}

} // namespace

std::pair<AbstractStore, AbstractStore> refine_branch(const Instruction& in, const AbstractStore& s) {
    if (!in.is_branch()) throw InternalError("refine_branch on a non-branch");
    if (s.bottom) return {s, s};

    AbstractStore taken = s;
    AbstractStore not_taken = s;

    if (in.rs1 == in.rs2) {
        // Same register on both sides: the comparison is constant.
        bool taken_possible = in.op == Op::Beq || in.op == Op::Bge;
        if (taken_possible) not_taken.bottom = true;
        else taken.bottom = true;
        return {taken, not_taken};
    }

    Interval& ta = taken.regs[in.rs1];
    Interval& tb = taken.regs[in.rs2];
    Interval& na = not_taken.regs[in.rs1];
    Interval& nb = not_taken.regs[in.rs2];
    switch (in.op) {
    case Op::Beq: refine_eq(ta, tb); refine_ne(na, nb); break;
    case Op::Bne: refine_ne(ta, tb); refine_eq(na, nb); break;
    case Op::Blt: refine_lt(ta, tb); refine_ge(na, nb); break;
    case Op::Bge: refine_ge(ta, tb); refine_lt(na, nb); break;
    default: break;
    }
    if (ta.is_bottom() || tb.is_bottom()) taken.bottom = true;
    if (na.is_bottom() || nb.is_bottom()) not_taken.bottom = true;
    return {taken, not_taken};
}

// ---------------------------------------------------------------------------
// Interprocedural fixpoint

namespace {

constexpr int kVisitGuard = 1000;

struct Engine {
    const Program& prog;
    const MachineConfig& mcfg;
    std::map<int, AbstractStore> block_in;
    std::map<int, AbstractStore> edge_store;
    std::vector<int> visits;
    std::set<int> widen_points;
    std::vector<std::string> warnings;

    Engine(const Program& p, const MachineConfig& m) : prog(p), mcfg(m), visits(p.blocks.size(), 0) {
        find_widen_points();
    }

    // Retreating-edge targets of a DFS over propagation edges. Covers every
    // loop header, including irreducible retreats, so widening always kicks in.
    void find_widen_points() {
        std::vector<int> state(prog.blocks.size(), 0);
        std::vector<std::pair<int, std::size_t>> stack;
        auto dfs_from = [&](int root) {
            if (state[root] != 0) return;
            stack.push_back({root, 0});
            state[root] = 1;
            while (!stack.empty()) {
                auto& [b, i] = stack.back();
                const auto& outs = prog.out_edges[b];
                bool advanced = false;
                while (i < outs.size()) {
                    const Edge& e = prog.edges[outs[i++]];
                    if (!carries_store(e.kind)) continue;
                    if (state[e.dst] == 1) widen_points.insert(e.dst);
                    else if (state[e.dst] == 0) {
                        state[e.dst] = 1;
                        stack.push_back({e.dst, 0});
                        advanced = true;
                        break;
                    }
                }
                if (!advanced && i >= outs.size()) {
                    state[b] = 2;
                    stack.pop_back();
                }
            }
        };
        dfs_from(prog.funcs[prog.entry_func].entry_block);
        for (const auto& f : prog.funcs) dfs_from(f.entry_block);
    }

    AbstractStore joined_in(int block, const AbstractStore& entry_store) {
        AbstractStore in;
        if (block == prog.funcs[prog.entry_func].entry_block) in = entry_store;
        for (int eid : prog.in_edges[block]) {
            const Edge& e = prog.edges[eid];
            if (!carries_store(e.kind)) continue;
            auto it = edge_store.find(eid);
            if (it != edge_store.end()) in = store_join(in, it->second);
        }
        return in;
    }

    // Runs the block and writes its outgoing edge stores. Returns successor
    // blocks whose input changed.
    std::vector<int> process(int block, const AbstractStore& in) {
        const BasicBlock& b = prog.blocks[block];
        AbstractStore s = in;
        std::optional<AccessRange> unused;
        for (const auto& instr : b.instrs) {
            if (s.bottom) break;
            TransferOut t = transfer(instr, s, mcfg);
            for (auto& w : t.warnings) warnings.push_back(std::move(w));
            s = std::move(t.store);
        }

        std::map<int, AbstractStore> outs;
        if (b.term == Terminator::Branch && !s.bottom) {
            auto [taken, not_taken] = refine_branch(b.last(), s);
            for (int eid : prog.out_edges[block]) {
                const Edge& e = prog.edges[eid];
                if (e.kind == EdgeKind::Taken) outs[eid] = taken;
                else if (e.kind == EdgeKind::NotTaken) outs[eid] = not_taken;
            }
        } else {
            for (int eid : prog.out_edges[block]) {
                if (!carries_store(prog.edges[eid].kind)) continue;
                outs[eid] = s;
            }
        }
        // Bottom input: every outgoing edge is bottom too.
        if (s.bottom)
            for (int eid : prog.out_edges[block])
                if (carries_store(prog.edges[eid].kind)) outs[eid] = AbstractStore{};

        std::vector<int> changed;
        for (auto& [eid, store] : outs) {
            auto it = edge_store.find(eid);
            if (it == edge_store.end() || !(it->second == store)) {
                edge_store[eid] = std::move(store);
                changed.push_back(prog.edges[eid].dst);
            }
        }
        return changed;
    }

    void run(const AbstractStore& entry_store) {
        std::deque<int> work;
        std::set<int> queued;
        auto push = [&](int b) {
            if (queued.insert(b).second) work.push_back(b);
        };
        push(prog.funcs[prog.entry_func].entry_block);

        while (!work.empty()) {
            int b = work.front();
            work.pop_front();
            queued.erase(b);
            if (++visits[b] > kVisitGuard)
                throw InternalError("value analysis did not stabilize at block " +
                                    to_hex(prog.blocks[b].start));

            AbstractStore in = joined_in(b, entry_store);
            auto it = block_in.find(b);
            if (widen_points.count(b) && visits[b] >= 2 && it != block_in.end())
                in = store_widen(it->second, store_join(it->second, in));
            if (it != block_in.end() && it->second == in && visits[b] > 1) continue;
            block_in[b] = in;
            if (in.bottom) continue;
            for (int succ : process(b, in)) push(succ);
        }

        // One descending pass: recompute without widening. Every value stays
        // above the least fixpoint, so this only sharpens.
        std::vector<int> order;
        for (const auto& b : prog.blocks)
            if (block_in.count(b.id)) order.push_back(b.id);
        for (int b : order) {
            AbstractStore in = joined_in(b, entry_store);
            block_in[b] = in;
            process(b, in); // a bottom input pushes bottom onto the out edges
        }
        for (int b : order) block_in[b] = joined_in(b, entry_store);
    }
};

} // namespace

Interval ValueResults::reg_before(Addr a, int reg) const {
    auto it = instr_pre.find(a);
    if (it == instr_pre.end()) return Interval::bottom();
    return it->second[reg];
}

ValueResults analyze_values(const Program& prog, const MachineConfig& mcfg,
                            const std::map<int, std::pair<std::int32_t, std::int32_t>>& inputs) {
    AbstractStore entry = AbstractStore::top_store();
    entry.regs[kStackPointer] = Interval::singleton(mcfg.stack_init);
    for (const auto& [r, range] : inputs) {
        if (r < 0 || r >= kStackPointer) throw UsageError("input ranges may cover r0..r14 only");
        if (range.second < range.first) throw UsageError("empty input range for r" + std::to_string(r));
        entry.regs[r] = Interval::of(range.first, range.second);
    }

    Engine eng(prog, mcfg);
    eng.run(entry);

    ValueResults vr;
    vr.block_in = eng.block_in;
    vr.warnings = std::move(eng.warnings);

    // Final collection pass: per-instruction pre-states, access ranges, and
    // final per-edge stores.
    for (const auto& b : prog.blocks) {
        auto it = vr.block_in.find(b.id);
        if (it == vr.block_in.end() || it->second.bottom) continue;
        AbstractStore s = it->second;
        for (const auto& instr : b.instrs) {
            if (s.bottom) break;
            vr.instr_pre[instr.addr] = s.regs;
            TransferOut t = transfer(instr, s, mcfg);
            if (t.access) vr.accesses[instr.addr] = *t.access;
            s = std::move(t.store);
        }
    }
    vr.edge_stores = std::move(eng.edge_store);

    for (const auto& e : prog.edges) {
        if (!carries_store(e.kind)) {
            // CallFlow summarizes through the callee; it is infeasible only
            // when its source never runs.
            if (!vr.reachable(e.src)) vr.infeasible_edges.insert(e.id);
            continue;
        }
        auto it = vr.edge_stores.find(e.id);
        if (it == vr.edge_stores.end() || it->second.bottom) vr.infeasible_edges.insert(e.id);
    }
    return vr;
}

JrResolution resolve_indirect_jumps(const Program& prog, const ValueResults& vr) {
    JrResolution out;
    for (const auto& b : prog.blocks) {
        if (b.term != Terminator::Indirect) continue;
        const Instruction& jr = b.last();
        Interval v = vr.reg_before(jr.addr, jr.rs1);
        if (v.is_bottom()) {
            out.targets[jr.addr] = {}; // never executed
            continue;
        }
        std::int64_t lo = std::max<std::int64_t>(v.lo, prog.image.load_address);
        std::int64_t hi = std::min<std::int64_t>(v.hi, static_cast<std::int64_t>(prog.image.code_end()) - 4);
        if (v.lo < prog.image.load_address || v.hi > static_cast<std::int64_t>(prog.image.code_end()) - 4 ||
            lo > hi) {
            out.unresolved.insert(jr.addr);
            continue;
        }
        lo = (lo + 3) & ~3LL;
        hi = hi & ~3LL;
        if (lo > hi || (hi - lo) / 4 + 1 > 64) {
            out.unresolved.insert(jr.addr);
            continue;
        }
        std::vector<Addr> targets;
        for (std::int64_t a = lo; a <= hi; a += 4) targets.push_back(static_cast<Addr>(a));
        out.targets[jr.addr] = std::move(targets);
    }
    return out;
}

} // namespace timebound

#include "doctest.h"

#include <random>

#include "timebound/cfg.hpp"
#include "timebound/errors.hpp"
#include "timebound/value.hpp"

#include "oracles.hpp"

using namespace timebound;

namespace {

AbstractStore top_with(int reg, Interval v) {
    AbstractStore s = AbstractStore::top_store();
    s.regs[reg] = v;
    return s;
}

Instruction instr(Op op, int rd, int rs1, int rs2, std::int32_t imm, Addr addr = 0) {
    Instruction in;
    in.op = op;
    in.rd = rd;
    in.rs1 = rs1;
    in.rs2 = rs2;
    in.imm = imm;
    in.addr = addr;
    return in;
}

ValueResults analyze_src(const std::string& src,
                         const std::map<int, std::pair<std::int32_t, std::int32_t>>& inputs = {}) {
    Program prog = build_cfg(assemble(src));
    return analyze_values(prog, MachineConfig{}, inputs);
}

} // namespace

TEST_CASE("interval arithmetic basics") {
    CHECK(interval_apply(Op::Add, Interval::of(1, 2), Interval::of(3, 4)) == Interval::of(4, 6));
    CHECK(interval_apply(Op::Add, Interval::of(Interval::kMax, Interval::kMax), Interval::of(1, 1))
              .is_top());
    CHECK(interval_apply(Op::Mul, Interval::of(-2, 3), Interval::of(4, 5)) == Interval::of(-10, 15));
    CHECK(interval_apply(Op::And, Interval::of(0, 100), Interval::singleton(7)) == Interval::of(0, 7));
    CHECK(interval_apply(Op::And, Interval::of(0, 100), Interval::of(1, 7)).is_top());
    CHECK(interval_apply(Op::Shl, Interval::of(1, 2), Interval::singleton(3)) == Interval::of(8, 16));
    CHECK(interval_apply(Op::Shr, Interval::of(16, 64), Interval::singleton(2)) == Interval::of(4, 16));
    CHECK(interval_apply(Op::Shl, Interval::singleton(1), Interval::singleton(33)) ==
          Interval::singleton(2)); // shift amounts wrap at 32
    CHECK(interval_apply(Op::Shl, Interval::of(1, 1), Interval::of(0, 40)).is_top());
    CHECK(interval_apply(Op::Add, Interval::bottom(), Interval::of(1, 2)).is_bottom());
}

TEST_CASE("interval arithmetic over-approximates every concrete result (small spans)") {
    CHECK(test_oracles::interval_conformance_failures(4) == 0);
}

TEST_CASE("join and meet behave like hull and intersection") {
    CHECK(interval_join(Interval::of(0, 1), Interval::of(5, 6)) == Interval::of(0, 6));
    CHECK(interval_join(Interval::bottom(), Interval::of(5, 6)) == Interval::of(5, 6));
    CHECK(interval_meet(Interval::of(0, 5), Interval::of(3, 9)) == Interval::of(3, 5));
    CHECK(interval_meet(Interval::of(0, 1), Interval::of(3, 9)).is_bottom());
}

TEST_CASE("join monotonicity holds on random intervals") {
    std::mt19937 rng(3);
    for (int i = 0; i < 5000; i++) {
        auto r = [&] { return static_cast<std::int64_t>(rng() % 2001) - 1000; };
        std::int64_t a1 = r(), a2 = r(), b1 = r(), b2 = r();
        Interval a = Interval::of(std::min(a1, a2), std::max(a1, a2));
        Interval b = Interval::of(std::min(b1, b2), std::max(b1, b2));
        Interval j = interval_join(a, b);
        CHECK(j.subsumes(a));
        CHECK(j.subsumes(b));
    }
}

TEST_CASE("threshold widening jumps to the documented thresholds") {
    CHECK(interval_widen(Interval::of(0, 1), Interval::of(0, 2)) == Interval::of(0, 255));
    CHECK(interval_widen(Interval::of(0, 300), Interval::of(0, 300)) == Interval::of(0, 300));
    CHECK(interval_widen(Interval::of(0, 300), Interval::of(0, 70000)) ==
          Interval::of(0, Interval::kMax));
    CHECK(interval_widen(Interval::of(0, 5), Interval::of(-3, 5)) == Interval::of(-2147483648LL, 5));
    CHECK(interval_widen(Interval::of(0, 5), Interval::of(-1, 5)) == Interval::of(-1, 5));
}

TEST_CASE("store transfer: constants, arithmetic, loads and stores") {
    MachineConfig mcfg;
    AbstractStore s = AbstractStore::top_store();

    SUBCASE("MOVI writes a singleton") {
        auto out = transfer(instr(Op::Movi, 1, 0, 0, 5), s, mcfg);
        CHECK(out.store.regs[1] == Interval::singleton(5));
    }
    SUBCASE("stack adjustment stays exact") {
        s.regs[kStackPointer] = Interval::singleton(0xFF00);
        auto out = transfer(instr(Op::Addi, 15, 15, 0, -16), s, mcfg);
        CHECK(out.store.regs[kStackPointer] == Interval::singleton(0xFEF0));
    }
    SUBCASE("singleton store tracks the cell, singleton load reads it back") {
        s.regs[1] = Interval::singleton(0x100);
        s.regs[2] = Interval::of(3, 4);
        auto st = transfer(instr(Op::St, 2, 1, 0, 0), s, mcfg);
        CHECK(st.store.cell(0x100) == Interval::of(3, 4));
        REQUIRE(st.access.has_value());
        CHECK(st.access->addrs == Interval::singleton(0x100));
        auto ld = transfer(instr(Op::Ld, 3, 1, 0, 0), st.store, mcfg);
        CHECK(ld.store.regs[3] == Interval::of(3, 4));
    }
    SUBCASE("wide store invalidates every overlapped cell") {
        s.cells[0x100] = Interval::singleton(1);
        s.cells[0x104] = Interval::singleton(2);
        s.cells[0x200] = Interval::singleton(3);
        s.regs[1] = Interval::of(0x100, 0x10C);
        auto out = transfer(instr(Op::St, 2, 1, 0, 0), s, mcfg);
        CHECK(out.store.cell(0x100).is_top());
        CHECK(out.store.cell(0x104).is_top());
        CHECK(out.store.cell(0x200) == Interval::singleton(3));
    }
    SUBCASE("CALL pushes the return address into a tracked cell") {
        s.regs[kStackPointer] = Interval::singleton(0xFF00);
        auto out = transfer(instr(Op::Call, 0, 0, 0, 0x40, 0x8), s, mcfg);
        CHECK(out.store.regs[kStackPointer] == Interval::singleton(0xFEFC));
        CHECK(out.store.cell(0xFEFC) == Interval::singleton(0xC));
        REQUIRE(out.access.has_value());
        CHECK(out.access->addrs == Interval::singleton(0xFEFC));
    }
    SUBCASE("SP leaving memory records a warning") {
        s.regs[kStackPointer] = Interval::singleton(0);
        auto out = transfer(instr(Op::Addi, 15, 15, 0, -4), s, mcfg);
        CHECK(out.warnings.size() == 1);
    }
}

TEST_CASE("branch refinement narrows both outcome stores") {
    SUBCASE("BLT splits an interval against a singleton") {
        AbstractStore s = top_with(1, Interval::of(0, 10));
        s.regs[2] = Interval::singleton(5);
        auto [taken, not_taken] = refine_branch(instr(Op::Blt, 0, 1, 2, 1), s);
        CHECK(taken.regs[1] == Interval::of(0, 4));
        CHECK(not_taken.regs[1] == Interval::of(5, 10));
    }
    SUBCASE("BGE against a larger constant is never taken") {
        AbstractStore s = top_with(1, Interval::of(0, 3));
        s.regs[2] = Interval::singleton(10);
        auto [taken, not_taken] = refine_branch(instr(Op::Bge, 0, 1, 2, 1), s);
        CHECK(taken.bottom);
        CHECK_FALSE(not_taken.bottom);
    }
    SUBCASE("BEQ on equal singletons is always taken") {
        AbstractStore s = top_with(1, Interval::singleton(7));
        s.regs[2] = Interval::singleton(7);
        auto [taken, not_taken] = refine_branch(instr(Op::Beq, 0, 1, 2, 1), s);
        CHECK_FALSE(taken.bottom);
        CHECK(not_taken.bottom);
    }
    SUBCASE("same-register comparisons are constant") {
        AbstractStore s = top_with(1, Interval::of(0, 9));
        auto [blt_t, blt_n] = refine_branch(instr(Op::Blt, 0, 1, 1, 1), s);
        CHECK(blt_t.bottom);
        CHECK_FALSE(blt_n.bottom);
    }
}

TEST_CASE("store join keeps common cells and drops one-sided ones") {
    AbstractStore a = AbstractStore::top_store();
    AbstractStore b = AbstractStore::top_store();
    a.regs[1] = Interval::of(0, 1);
    b.regs[1] = Interval::of(5, 6);
    a.cells[0x100] = Interval::singleton(1);
    b.cells[0x100] = Interval::singleton(2);
    a.cells[0x104] = Interval::singleton(9);
    AbstractStore j = store_join(a, b);
    CHECK(j.regs[1] == Interval::of(0, 6));
    CHECK(j.cell(0x100) == Interval::of(1, 2));
    CHECK(j.cell(0x104).is_top());
    CHECK(store_join(AbstractStore{}, a) == a);
}

TEST_CASE("fixpoint: entry store and loop narrowing") {
    // r1 counts 0..9; the exit edge must know r1 == 10.
    ValueResults vr = analyze_src(
        "MOVI r1,0\nMOVI r2,10\nhead: BGE r1,r2,done\nADDI r1,r1,1\nJMP head\ndone: HALT\n");
    CHECK(vr.reg_before(0, kStackPointer) == Interval::singleton(0xFF00));
    Addr halt_addr = 5 * 4;
    CHECK(vr.reg_before(halt_addr, 1) == Interval::singleton(10));
}

TEST_CASE("constant conditions mark one edge infeasible") {
    Program prog = build_cfg(assemble(
        "MOVI r1,3\nMOVI r2,5\nBLT r1,r2,good\nMUL r9,r9,r9\ngood: HALT\n"));
    ValueResults vr = analyze_values(prog, MachineConfig{}, {});
    int infeasible_branch_edges = 0;
    for (const auto& e : prog.edges)
        if (e.kind == EdgeKind::NotTaken && vr.infeasible_edges.count(e.id)) infeasible_branch_edges++;
    CHECK(infeasible_branch_edges == 1);
    // The dead block never contributes observations.
    CHECK(vr.instr_pre.count(12) == 0);
}

TEST_CASE("annotated inputs seed the entry store") {
    ValueResults vr = analyze_src("ADD r2,r1,r1\nHALT\n", {{1, {0, 63}}});
    CHECK(vr.reg_before(0, 1) == Interval::of(0, 63));
    CHECK(vr.reg_before(4, 2) == Interval::of(0, 126));
}

TEST_CASE("interprocedural flow returns the callee's effect") {
    ValueResults vr = analyze_src(
        "main: CALL f\nADD r3,r1,r1\nHALT\n"
        "f: MOVI r1,21\nRET\n");
    CHECK(vr.reg_before(4, 1) == Interval::singleton(21));
    CHECK(vr.reg_before(8, 3) == Interval::singleton(42));
    CHECK(vr.reg_before(8, kStackPointer) == Interval::singleton(0xFF00));
}

TEST_CASE("indirect jump resolution enumerates aligned targets") {
    Program prog = build_cfg(assemble("JR r1\nHALT\nMOVI r2,1\nHALT\n"));
    ValueResults vr;

    SUBCASE("singleton") {
        vr = analyze_values(prog, MachineConfig{}, {{1, {4, 4}}});
        auto jr = resolve_indirect_jumps(prog, vr);
        CHECK(jr.unresolved.empty());
        CHECK(jr.targets.at(0) == std::vector<Addr>{4});
    }
    SUBCASE("range") {
        vr = analyze_values(prog, MachineConfig{}, {{1, {4, 12}}});
        auto jr = resolve_indirect_jumps(prog, vr);
        CHECK(jr.targets.at(0) == std::vector<Addr>{4, 8, 12});
    }
    SUBCASE("unknown register") {
        vr = analyze_values(prog, MachineConfig{}, {});
        auto jr = resolve_indirect_jumps(prog, vr);
        CHECK(jr.unresolved.count(0) == 1);
    }
}

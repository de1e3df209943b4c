#include "timebound/cfg.hpp"

#include <algorithm>
#include <deque>
#include <functional>

#include "timebound/errors.hpp"

namespace timebound {

const char* edge_kind_name(EdgeKind k) {
    switch (k) {
    case EdgeKind::Taken: return "taken";
    case EdgeKind::NotTaken: return "not-taken";
    case EdgeKind::Fallthrough: return "fallthrough";
    case EdgeKind::CallFlow: return "call";
    case EdgeKind::CallEnter: return "call-enter";
    case EdgeKind::Return: return "return";
    }
    return "?";
}

bool is_intraproc(EdgeKind k) {
    return k == EdgeKind::Taken || k == EdgeKind::NotTaken || k == EdgeKind::Fallthrough ||
           k == EdgeKind::CallFlow;
}

bool carries_store(EdgeKind k) { return k != EdgeKind::CallFlow; }

int Program::block_containing(Addr a) const {
    auto it = block_starts.upper_bound(a);
    if (it == block_starts.begin()) return -1;
    --it;
    const BasicBlock& b = blocks[it->second];
    return (a >= b.start && a < b.end) ? b.id : -1;
}

const Instruction* Program::instr_at(Addr a) const {
    int b = block_containing(a);
    if (b < 0) return nullptr;
    for (const auto& in : blocks[b].instrs)
        if (in.addr == a) return &in;
    return nullptr;
}

int Program::func_index_of_entry(Addr a) const {
    for (const auto& f : funcs)
        if (f.entry_addr == a) return f.index;
    return -1;
}

namespace {

struct Explorer {
    const ProgramImage& image;
    const std::map<Addr, std::vector<Addr>>& jr_targets;
    std::map<Addr, Instruction> decoded;
    std::set<Addr> leaders;
    std::set<Addr> func_entries;
    std::set<Addr> unresolved_jr;

    const Instruction& decode_at(Addr a) {
        auto it = decoded.find(a);
        if (it != decoded.end()) return it->second;
        if (!image.contains(a) || a + 4 > image.code_end())
            throw AnalysisError("control flow leaves the image at " + to_hex(a));
        try {
            return decoded.emplace(a, decode_instruction(image.word_at(a), a)).first->second;
        } catch (const DecodeError& e) {
            throw AnalysisError(std::string("undecodable instruction: ") + e.what());
        }
    }

    void check_target(Addr t, Addr from) {
        if (t % 4 != 0)
            throw AnalysisError("misaligned control target " + to_hex(t) + " from " + to_hex(from));
        if (!image.contains(t))
            throw AnalysisError("jump outside the image: " + to_hex(t) + " from " + to_hex(from));
    }

    std::vector<Addr> successors(const Instruction& in) {
        switch (in.op) {
        case Op::Halt:
        case Op::Ret:
            return {};
        case Op::Jmp: {
            Addr t = static_cast<Addr>(in.imm);
            check_target(t, in.addr);
            return {t};
        }
        case Op::Call: {
            Addr t = static_cast<Addr>(in.imm);
            check_target(t, in.addr);
            if (!image.contains(in.next_addr()))
                throw AnalysisError("CALL at " + to_hex(in.addr) + " has no in-image return point");
            func_entries.insert(t);
            return {t, in.next_addr()};
        }
        case Op::Jr: {
            auto it = jr_targets.find(in.addr);
            if (it == jr_targets.end() || it->second.empty()) {
                unresolved_jr.insert(in.addr);
                return {};
            }
            for (Addr t : it->second) check_target(t, in.addr);
            return it->second;
        }
        default:
            if (in.is_branch()) {
                Addr t = in.branch_target();
                check_target(t, in.addr);
                return {t, in.next_addr()};
            }
            return {in.next_addr()};
        }
    }

    void explore(Addr entry) {
        func_entries.insert(entry);
        leaders.insert(entry);
        std::deque<Addr> work{entry};
        std::set<Addr> seen{entry};
        while (!work.empty()) {
            Addr a = work.front();
            work.pop_front();
            const Instruction& in = decode_at(a);
            auto succs = successors(in);
            if (in.is_control()) {
                for (Addr t : succs) leaders.insert(t);
            }
            for (Addr t : succs) {
                if (seen.insert(t).second) work.push_back(t);
            }
        }
    }
};

Terminator terminator_of(const Instruction& in) {
    if (in.is_branch()) return Terminator::Branch;
    switch (in.op) {
    case Op::Jmp: return Terminator::Jump;
    case Op::Call: return Terminator::Call;
    case Op::Ret: return Terminator::Return;
    case Op::Halt: return Terminator::Halt;
    case Op::Jr: return Terminator::Indirect;
    default: return Terminator::Fallthrough;
    }
}

} // namespace

Program build_cfg(const ProgramImage& image, std::optional<Addr> entry_override,
                  const std::map<Addr, std::vector<Addr>>& jr_targets) {
    image.validate();
    Addr entry = entry_override.value_or(image.entry);
    if (!image.contains(entry) || entry % 4 != 0)
        throw AnalysisError("analysis entry " + to_hex(entry) + " outside image or misaligned");

    Explorer ex{image, jr_targets, {}, {}, {}, {}};
    ex.explore(entry);

    Program prog;
    prog.image = image;
    prog.jr_targets = jr_targets;
    prog.unresolved_jr = ex.unresolved_jr;
    prog.analysis_entry = entry;

    // Form blocks: from each leader, run to the next leader or past a control
    // transfer, whichever comes first.
    for (Addr lead : ex.leaders) {
        if (!ex.decoded.count(lead)) continue;
        BasicBlock b;
        b.id = static_cast<int>(prog.blocks.size());
        b.start = lead;
        Addr a = lead;
        while (true) {
            const Instruction& in = ex.decoded.at(a);
            b.instrs.push_back(in);
            if (in.is_control()) {
                b.term = terminator_of(in);
                b.end = a + 4;
                break;
            }
            if (ex.leaders.count(a + 4)) {
                b.term = Terminator::Fallthrough;
                b.end = a + 4;
                break;
            }
            a += 4;
        }
        prog.block_starts[b.start] = b.id;
        prog.blocks.push_back(std::move(b));
    }

    auto block_at = [&](Addr a) {
        auto it = prog.block_starts.find(a);
        if (it == prog.block_starts.end())
            throw InternalError("no block starts at " + to_hex(a));
        return it->second;
    };

    // Intraprocedural and interprocedural edges.
    auto add_edge = [&](int src, int dst, EdgeKind kind) {
        prog.edges.push_back({static_cast<int>(prog.edges.size()), src, dst, kind});
    };
    for (const auto& b : prog.blocks) {
        const Instruction& last = b.instrs.back();
        switch (b.term) {
        case Terminator::Fallthrough:
            add_edge(b.id, block_at(b.end), EdgeKind::Fallthrough);
            break;
        case Terminator::Branch:
            add_edge(b.id, block_at(last.branch_target()), EdgeKind::Taken);
            add_edge(b.id, block_at(last.next_addr()), EdgeKind::NotTaken);
            break;
        case Terminator::Jump:
            add_edge(b.id, block_at(static_cast<Addr>(last.imm)), EdgeKind::Taken);
            break;
        case Terminator::Indirect: {
            auto it = jr_targets.find(last.addr);
            if (it != jr_targets.end())
                for (Addr t : it->second) add_edge(b.id, block_at(t), EdgeKind::Taken);
            break;
        }
        case Terminator::Call:
            add_edge(b.id, block_at(last.next_addr()), EdgeKind::CallFlow);
            break;
        case Terminator::Return:
        case Terminator::Halt:
            break;
        }
    }

    // Partition blocks into functions; overlapping claims mean control flow
    // crosses a function boundary without a CALL, which is rejected.
    std::vector<Addr> entries(ex.func_entries.begin(), ex.func_entries.end());
    std::sort(entries.begin(), entries.end());
    // Analysis entry gets function index 0.
    entries.erase(std::remove(entries.begin(), entries.end(), entry), entries.end());
    entries.insert(entries.begin(), entry);

    std::vector<std::vector<int>> intra_out(prog.blocks.size());
    for (const auto& e : prog.edges)
        if (is_intraproc(e.kind)) intra_out[e.src].push_back(e.dst);

    for (std::size_t fi = 0; fi < entries.size(); fi++) {
        FunctionCfg f;
        f.index = static_cast<int>(fi);
        f.entry_addr = entries[fi];
        f.entry_block = block_at(entries[fi]);
        std::deque<int> work{f.entry_block};
        std::set<int> seen{f.entry_block};
        while (!work.empty()) {
            int b = work.front();
            work.pop_front();
            if (prog.blocks[b].func != -1 && prog.blocks[b].func != f.index)
                throw AnalysisError("function overlap at " + to_hex(prog.blocks[b].start) +
                                    ": reachable from " + to_hex(f.entry_addr) + " and " +
                                    to_hex(prog.funcs[prog.blocks[b].func].entry_addr));
            prog.blocks[b].func = f.index;
            f.blocks.push_back(b);
            for (int d : intra_out[b])
                if (seen.insert(d).second) work.push_back(d);
        }
        std::sort(f.blocks.begin(), f.blocks.end(), [&](int a, int b) {
            return prog.blocks[a].start < prog.blocks[b].start;
        });
        for (int b : f.blocks)
            if (prog.blocks[b].term == Terminator::Return || prog.blocks[b].term == Terminator::Halt)
                f.exit_blocks.push_back(b);
        prog.funcs.push_back(std::move(f));
    }
    for (const auto& b : prog.blocks)
        if (b.func == -1) throw InternalError("orphan block at " + to_hex(b.start));

    // A resolved JR must stay inside its own function.
    for (const auto& e : prog.edges) {
        if (!is_intraproc(e.kind)) continue;
        if (prog.blocks[e.src].func != prog.blocks[e.dst].func)
            throw InternalError("intraprocedural edge crosses functions at " +
                                to_hex(prog.blocks[e.src].start));
    }

    // Call graph, CallEnter and Return edges.
    for (const auto& b : prog.blocks) {
        if (b.term != Terminator::Call) continue;
        Addr callee_addr = static_cast<Addr>(b.instrs.back().imm);
        int callee = prog.func_index_of_entry(callee_addr);
        if (callee < 0) throw InternalError("no function at CALL target " + to_hex(callee_addr));
        prog.callgraph.push_back({b.instrs.back().addr, b.func, callee});
        add_edge(b.id, prog.funcs[callee].entry_block, EdgeKind::CallEnter);
    }
    for (const auto& cg : prog.callgraph) {
        int post = prog.block_containing(cg.call_site + 4);
        for (int rb : prog.funcs[cg.callee].blocks)
            if (prog.blocks[rb].term == Terminator::Return)
                add_edge(rb, post, EdgeKind::Return);
    }

    for (auto& f : prog.funcs)
        for (const auto& e : prog.edges)
            if (is_intraproc(e.kind) && prog.blocks[e.src].func == f.index)
                f.edges.push_back(e.id);

    prog.out_edges.assign(prog.blocks.size(), {});
    prog.in_edges.assign(prog.blocks.size(), {});
    for (const auto& e : prog.edges) {
        prog.out_edges[e.src].push_back(e.id);
        prog.in_edges[e.dst].push_back(e.id);
    }
    prog.entry_func = 0;
    return prog;
}

std::vector<int> compute_idom(int n, int entry, const std::vector<std::pair<int, int>>& edges) {
    std::vector<std::vector<int>> succ(n), pred(n);
    for (auto [s, d] : edges) {
        succ[s].push_back(d);
        pred[d].push_back(s);
    }
    // Reverse postorder.
    std::vector<int> order;
    std::vector<char> mark(n, 0);
    std::vector<std::pair<int, std::size_t>> stack{{entry, 0}};
    mark[entry] = 1;
    while (!stack.empty()) {
        auto& [node, i] = stack.back();
        if (i < succ[node].size()) {
            int next = succ[node][i++];
            if (!mark[next]) {
                mark[next] = 1;
                stack.push_back({next, 0});
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    std::reverse(order.begin(), order.end());
    std::vector<int> rpo_index(n, -1);
    for (std::size_t i = 0; i < order.size(); i++) rpo_index[order[i]] = static_cast<int>(i);

    std::vector<int> idom(n, -1);
    idom[entry] = entry;
    auto intersect = [&](int a, int b) {
        while (a != b) {
            while (rpo_index[a] > rpo_index[b]) a = idom[a];
            while (rpo_index[b] > rpo_index[a]) b = idom[b];
        }
        return a;
    };
    bool changed = true;
    while (changed) {
        changed = false;
        for (int node : order) {
            if (node == entry) continue;
            int new_idom = -1;
            for (int p : pred[node]) {
                if (idom[p] == -1) continue;
                new_idom = new_idom == -1 ? p : intersect(p, new_idom);
            }
            if (new_idom != -1 && idom[node] != new_idom) {
                idom[node] = new_idom;
                changed = true;
            }
        }
    }
    return idom;
}

namespace {

// Map a function's blocks to dense indices for the generic algorithms.
struct DenseFunc {
    std::vector<int> to_block;
    std::map<int, int> to_dense;
    std::vector<std::pair<int, int>> edges;

    DenseFunc(const Program& prog, const FunctionCfg& f) {
        for (int b : f.blocks) {
            to_dense[b] = static_cast<int>(to_block.size());
            to_block.push_back(b);
        }
        for (int eid : f.edges) {
            const Edge& e = prog.edges[eid];
            edges.push_back({to_dense.at(e.src), to_dense.at(e.dst)});
        }
    }
};

} // namespace

void compute_dominators(Program& prog, FunctionCfg& f) {
    DenseFunc df(prog, f);
    auto idom = compute_idom(static_cast<int>(df.to_block.size()), df.to_dense.at(f.entry_block), df.edges);
    f.idom.clear();
    for (std::size_t i = 0; i < idom.size(); i++)
        if (idom[i] != -1) f.idom[df.to_block[i]] = df.to_block[idom[i]];
}

void find_natural_loops(Program& prog, FunctionCfg& f) {
    if (f.idom.empty()) compute_dominators(prog, f);
    auto dominates = [&](int a, int b) {
        int x = b;
        while (true) {
            if (x == a) return true;
            int up = f.idom.at(x);
            if (up == x) return a == x;
            x = up;
        }
    };

    std::map<int, std::vector<int>> succs;
    for (int eid : f.edges) succs[prog.edges[eid].src].push_back(prog.edges[eid].dst);

    // DFS retreating edges; each must target a dominator of its source.
    std::map<int, int> state; // 0 unseen, 1 on stack, 2 done
    std::vector<std::pair<int, std::size_t>> stack{{f.entry_block, 0}};
    state[f.entry_block] = 1;
    std::vector<std::pair<int, int>> back_edges;
    while (!stack.empty()) {
        auto& [node, i] = stack.back();
        auto& sl = succs[node];
        if (i < sl.size()) {
            int next = sl[i++];
            int st = state.count(next) ? state[next] : 0;
            if (st == 1) {
                if (!dominates(next, node))
                    throw AnalysisError("irreducible control flow at " + to_hex(prog.blocks[next].start));
                back_edges.push_back({node, next});
            } else if (st == 0) {
                state[next] = 1;
                stack.push_back({next, 0});
            }
        } else {
            state[node] = 2;
            stack.pop_back();
        }
    }
    std::map<int, std::vector<int>> preds;
    for (int eid : f.edges) preds[prog.edges[eid].dst].push_back(prog.edges[eid].src);

    std::map<int, Loop> by_header;
    for (auto [src, header] : back_edges) {
        Loop& loop = by_header[header];
        loop.header = header;
        loop.back_edge_srcs.push_back(src);
        // Natural loop body: header plus everything reaching src without
        // passing through header.
        loop.body.insert(header);
        std::deque<int> work;
        if (loop.body.insert(src).second) work.push_back(src);
        while (!work.empty()) {
            int b = work.front();
            work.pop_front();
            for (int p : preds[b])
                if (loop.body.insert(p).second) work.push_back(p);
        }
    }
    f.loops.clear();
    for (auto& [h, loop] : by_header) {
        std::sort(loop.back_edge_srcs.begin(), loop.back_edge_srcs.end());
        loop.back_edge_srcs.erase(std::unique(loop.back_edge_srcs.begin(), loop.back_edge_srcs.end()),
                                  loop.back_edge_srcs.end());
        f.loops.push_back(loop);
    }
}

std::vector<int> call_order_bottom_up(const Program& prog) {
    int n = static_cast<int>(prog.funcs.size());
    std::vector<std::set<int>> callees(n);
    for (const auto& cg : prog.callgraph) callees[cg.caller].insert(cg.callee);

    std::vector<int> state(n, 0), order;
    std::vector<int> chain;
    // Iterative DFS with cycle reporting.
    std::function<void(int)> visit = [&](int fi) {
        state[fi] = 1;
        chain.push_back(fi);
        for (int c : callees[fi]) {
            if (state[c] == 1) {
                std::string msg = "recursion unsupported at ";
                for (int x : chain) msg += to_hex(prog.funcs[x].entry_addr) + " -> ";
                msg += to_hex(prog.funcs[c].entry_addr);
                throw AnalysisError(msg);
            }
            if (state[c] == 0) visit(c);
        }
        chain.pop_back();
        state[fi] = 2;
        order.push_back(fi);
    };
    for (int fi = 0; fi < n; fi++)
        if (state[fi] == 0) visit(fi);
    return order;
}

std::vector<int> loop_entry_edges(const Program& prog, const FunctionCfg& f, const Loop& loop) {
    std::vector<int> out;
    for (int eid : f.edges) {
        const Edge& e = prog.edges[eid];
        if (e.dst == loop.header && !loop.body.count(e.src)) out.push_back(eid);
    }
    return out;
}

} // namespace timebound

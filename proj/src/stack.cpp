#include "timebound/stack.hpp"

#include <algorithm>
#include <map>

#include "timebound/errors.hpp"

namespace timebound {

StackResult analyze_stack(const Program& prog, const ValueResults& vr, const MachineConfig& mcfg) {
    (void)mcfg;
    std::vector<int> order = call_order_bottom_up(prog); // throws on recursion

    // SP interval at function entry: the joined block input of its entry block.
    auto entry_sp = [&](const FunctionCfg& f) {
        auto it = vr.block_in.find(f.entry_block);
        if (it == vr.block_in.end() || it->second.bottom)
            return Interval::bottom(); // function never reached
        return it->second.regs[kStackPointer];
    };

    std::map<int, std::int64_t> total;   // function index -> total depth
    std::map<int, std::int64_t> local;   // function index -> local depth
    std::map<int, int> deepest_callee;   // function index -> callee attaining total, or -1

    for (int fi : order) {
        const FunctionCfg& f = prog.funcs[fi];
        Interval sp0 = entry_sp(f);
        if (sp0.is_bottom()) {
            // Unreachable function: contributes nothing.
            total[fi] = 0;
            local[fi] = 0;
            deepest_callee[fi] = -1;
            continue;
        }
        if (sp0.is_top())
            throw AnalysisError("stack pointer lost at " + to_hex(f.entry_addr));

        std::int64_t local_max = 0;
        std::int64_t call_max = -1;
        int best_callee = -1;

        for (int bid : f.blocks) {
            const BasicBlock& b = prog.blocks[bid];
            for (const auto& in : b.instrs) {
                auto pre = vr.instr_pre.find(in.addr);
                if (pre == vr.instr_pre.end()) continue; // dead instruction
                const Interval& sp = pre->second[kStackPointer];
                if (sp.is_top())
                    throw AnalysisError("stack pointer lost at " + to_hex(in.addr));
                std::int64_t depth = std::max<std::int64_t>(0, sp0.hi - sp.lo);
                local_max = std::max(local_max, depth);
                if (in.op == Op::Call) {
                    int callee = -1;
                    for (const auto& cg : prog.callgraph)
                        if (cg.call_site == in.addr) callee = cg.callee;
                    if (callee < 0) throw InternalError("call site without call graph edge");
                    local_max = std::max(local_max, depth + 4);
                    std::int64_t chained = depth + 4 + total.at(callee);
                    if (chained > call_max) { // first site wins ties (blocks walk in address order)
                        call_max = chained;
                        best_callee = callee;
                    }
                }
            }
        }
        local[fi] = local_max;
        total[fi] = std::max(local_max, call_max);
        deepest_callee[fi] = call_max >= local_max ? best_callee : -1;
    }

    StackResult res;
    for (const auto& f : prog.funcs)
        res.functions.push_back({f.entry_addr, local.at(f.index), total.at(f.index)});
    std::sort(res.functions.begin(), res.functions.end(),
              [](const FunctionStack& a, const FunctionStack& b) { return a.entry < b.entry; });

    res.global_bound = total.at(prog.entry_func);
    int fi = prog.entry_func;
    res.witness.push_back(prog.funcs[fi].entry_addr);
    while (deepest_callee.at(fi) >= 0) {
        fi = deepest_callee.at(fi);
        res.witness.push_back(prog.funcs[fi].entry_addr);
    }
    return res;
}

} // namespace timebound

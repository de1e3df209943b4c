#include "timebound/report.hpp"

#include <algorithm>
#include <sstream>

namespace timebound {

std::string emit_report(const AnalysisResult& res) {
    std::ostringstream os;
    const Program& prog = res.prog;

    if (res.has_wcet) {
        os << "WCET GLOBAL " << res.wcet.global_wcet << "\n";
        for (const auto& f : prog.funcs) {
            auto it = res.wcet.function_wcet.find(f.index);
            if (it != res.wcet.function_wcet.end())
                os << "WCET FUNC " << to_hex(f.entry_addr) << " " << it->second << "\n";
        }
    }

    if (res.has_stack) {
        for (const auto& fs : res.stack.functions)
            os << "STACK " << to_hex(fs.entry) << " local=" << fs.local_depth
               << " total=" << fs.total_depth << "\n";
        os << "STACK GLOBAL " << res.stack.global_bound << " via ";
        for (std::size_t i = 0; i < res.stack.witness.size(); i++) {
            if (i) os << "->";
            os << to_hex(res.stack.witness[i]);
        }
        os << "\n";
    }

    if (res.has_wcet) {
        for (const auto& f : prog.funcs)
            for (int bid : f.blocks)
                os << "BLOCK " << to_hex(f.entry_addr) << " " << to_hex(prog.blocks[bid].start)
                   << " t=" << res.block_times.at(bid) << "\n";

        std::map<char, std::map<AccessClass, int>> summary;
        for (const auto& [addr, cls] : res.cache.cls.fetch) {
            os << "CACHE " << to_hex(addr) << " I " << access_class_name(cls) << "\n";
            summary['I'][cls]++;
        }
        for (const auto& [addr, cls] : res.cache.cls.data) {
            os << "CACHE " << to_hex(addr) << " D " << access_class_name(cls) << "\n";
            summary['D'][cls]++;
        }
        for (char kind : {'I', 'D'}) {
            auto& s = summary[kind];
            os << "CACHE SUMMARY " << kind << " AH=" << s[AccessClass::AlwaysHit]
               << " AM=" << s[AccessClass::AlwaysMiss] << " NC=" << s[AccessClass::NotClassified]
               << "\n";
        }

        for (const auto& e : prog.edges) {
            if (!is_intraproc(e.kind) || !res.vr.infeasible_edges.count(e.id)) continue;
            os << "INFEASIBLE " << to_hex(prog.blocks[e.src].start) << " "
               << to_hex(prog.blocks[e.dst].start) << " " << edge_kind_name(e.kind) << "\n";
        }
    }

    for (const auto& w : res.warnings) os << "WARN " << w << "\n";
    return os.str();
}

std::string emit_dot(const AnalysisResult& res, const FunctionCfg& f) {
    const Program& prog = res.prog;
    std::ostringstream os;
    os << "digraph \"func_" << to_hex(f.entry_addr) << "\" {\n";
    os << "  node [shape=box fontname=\"monospace\"];\n";
    for (int bid : f.blocks) {
        const BasicBlock& b = prog.blocks[bid];
        std::int64_t t = res.block_times.count(bid) ? res.block_times.at(bid) : 0;
        std::int64_t x = res.wcet.block_counts.count(bid) ? res.wcet.block_counts.at(bid) : 0;
        os << "  b" << bid << " [label=\"" << to_hex(b.start) << "-" << to_hex(b.last_addr())
           << "\\nt=" << t << " x=" << x << "\"];\n";
    }
    for (int eid : f.edges) {
        const Edge& e = prog.edges[eid];
        std::int64_t flow = res.wcet.edge_counts.count(eid) ? res.wcet.edge_counts.at(eid) : 0;
        os << "  b" << e.src << " -> b" << e.dst << " [label=\"" << edge_kind_name(e.kind) << "\"";
        if (res.vr.infeasible_edges.count(eid)) os << " style=dotted";
        else if (flow > 0) os << " color=red";
        os << "];\n";
    }
    os << "}\n";
    return os.str();
}

std::map<std::string, std::string> emit_all_dot(const AnalysisResult& res) {
    std::map<std::string, std::string> out;
    for (const auto& f : res.prog.funcs)
        out[to_hex(f.entry_addr) + ".dot"] = emit_dot(res, f);
    return out;
}

} // namespace timebound

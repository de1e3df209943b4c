#include "timebound/ipet.hpp"

#include <algorithm>
#include <queue>
#include <sstream>

#include "timebound/errors.hpp"

namespace timebound {

int IlpModel::add_var(const std::string& name, Rat obj_coef, bool integer) {
    var_names.push_back(name);
    objective.push_back(obj_coef);
    is_integer.push_back(integer);
    return static_cast<int>(var_names.size()) - 1;
}

std::string IlpModel::to_text() const {
    std::ostringstream os;
    os << "maximize:";
    for (int j = 0; j < num_vars(); j++)
        if (!objective[j].is_zero()) os << " + " << objective[j].str() << "*" << var_names[j];
    os << "\n";
    for (const auto& c : constraints) {
        os << c.name << ":";
        bool first = true;
        for (const auto& t : c.terms) {
            if (t.coef.is_zero()) continue;
            os << (first ? " " : " + ") << t.coef.str() << "*" << var_names[t.var];
            first = false;
        }
        if (first) os << " 0";
        os << (c.rel == Rel::Le ? " <= " : c.rel == Rel::Eq ? " = " : " >= ") << c.rhs.str() << "\n";
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Two-phase primal simplex with exact rationals and Bland's rule.

namespace {

struct Tableau {
    int n_struct;            // structural variables
    int n_total;             // structural + slack/surplus + artificial
    int first_artificial;    // column index of the first artificial, or n_total
    std::vector<std::vector<Rat>> a; // m rows * n_total
    std::vector<Rat> b;              // m
    std::vector<int> basis;          // m

    int rows() const { return static_cast<int>(a.size()); }

    void pivot(int r, int j) {
        Rat p = a[r][j];
        for (auto& v : a[r]) v /= p;
        b[r] /= p;
        for (int i = 0; i < rows(); i++) {
            if (i == r || a[i][j].is_zero()) continue;
            Rat f = a[i][j];
            for (int k = 0; k < n_total; k++) a[i][k] -= f * a[r][k];
            b[i] -= f * b[r];
        }
        basis[r] = j;
    }

    // Maximizes c over the current basis. Returns false when unbounded.
    bool optimize(const std::vector<Rat>& c, bool allow_artificial_entering) {
        while (true) {
            // Reduced costs via the basic cost vector.
            std::vector<Rat> y(rows());
            for (int i = 0; i < rows(); i++) y[i] = c[basis[i]];
            int enter = -1;
            for (int j = 0; j < n_total; j++) {
                if (!allow_artificial_entering && j >= first_artificial) continue;
                bool basic = std::find(basis.begin(), basis.end(), j) != basis.end();
                if (basic) continue;
                Rat cbar = c[j];
                for (int i = 0; i < rows(); i++)
                    if (!a[i][j].is_zero()) cbar -= y[i] * a[i][j];
                if (cbar > Rat(0)) {
                    enter = j; // Bland: first improving column
                    break;
                }
            }
            if (enter < 0) return true;

            int leave = -1;
            Rat best_ratio;
            for (int i = 0; i < rows(); i++) {
                if (!(a[i][enter] > Rat(0))) continue;
                Rat ratio = b[i] / a[i][enter];
                if (leave < 0 || ratio < best_ratio ||
                    (ratio == best_ratio && basis[i] < basis[leave])) {
                    leave = i;
                    best_ratio = ratio;
                }
            }
            if (leave < 0) return false;
            pivot(leave, enter);
        }
    }
};

} // namespace

LpSolution solve_lp(const IlpModel& model) {
    int n = model.num_vars();
    int m = static_cast<int>(model.constraints.size());

    // Count extra columns.
    int n_slack = 0, n_art = 0;
    for (const auto& c : model.constraints) {
        bool flip = c.rhs < Rat(0);
        Rel rel = c.rel;
        if (flip && rel != Rel::Eq) rel = rel == Rel::Le ? Rel::Ge : Rel::Le;
        if (rel != Rel::Eq) n_slack++;
        if (rel != Rel::Le) n_art++;
    }

    Tableau t;
    t.n_struct = n;
    t.n_total = n + n_slack + n_art;
    t.first_artificial = n + n_slack;
    t.a.assign(m, std::vector<Rat>(t.n_total, Rat(0)));
    t.b.assign(m, Rat(0));
    t.basis.assign(m, -1);

    int slack_col = n;
    int art_col = n + n_slack;
    for (int i = 0; i < m; i++) {
        const Constraint& c = model.constraints[i];
        // Normalize to a non-negative right-hand side.
        Rat sign = c.rhs < Rat(0) ? Rat(-1) : Rat(1);
        for (const auto& term : c.terms) t.a[i][term.var] += sign * term.coef;
        t.b[i] = sign * c.rhs;
        Rel rel = c.rel;
        if (sign == Rat(-1) && rel != Rel::Eq) rel = rel == Rel::Le ? Rel::Ge : Rel::Le;
        switch (rel) {
        case Rel::Le:
            t.a[i][slack_col] = Rat(1);
            t.basis[i] = slack_col++;
            break;
        case Rel::Ge:
            t.a[i][slack_col++] = Rat(-1);
            t.a[i][art_col] = Rat(1);
            t.basis[i] = art_col++;
            break;
        case Rel::Eq:
            t.a[i][art_col] = Rat(1);
            t.basis[i] = art_col++;
            break;
        }
    }

    LpSolution out;
    if (n_art > 0) {
        std::vector<Rat> phase1(t.n_total, Rat(0));
        for (int j = t.first_artificial; j < t.n_total; j++) phase1[j] = Rat(-1);
        if (!t.optimize(phase1, true)) throw InternalError("phase-1 objective unbounded");
        Rat art_sum(0);
        for (int i = 0; i < t.rows(); i++)
            if (t.basis[i] >= t.first_artificial) art_sum += t.b[i];
        if (!art_sum.is_zero()) {
            out.status = SolveStatus::Infeasible;
            return out;
        }
        // Pivot out artificials stuck in the basis at level zero.
        for (int i = 0; i < t.rows(); i++) {
            if (t.basis[i] < t.first_artificial) continue;
            for (int j = 0; j < t.first_artificial; j++) {
                if (!t.a[i][j].is_zero()) {
                    t.pivot(i, j);
                    break;
                }
            }
        }
    }

    std::vector<Rat> phase2(t.n_total, Rat(0));
    for (int j = 0; j < n; j++) phase2[j] = model.objective[j];
    if (!t.optimize(phase2, false)) {
        out.status = SolveStatus::Unbounded;
        return out;
    }

    out.status = SolveStatus::Optimal;
    out.x.assign(n, Rat(0));
    for (int i = 0; i < t.rows(); i++)
        if (t.basis[i] < n) out.x[t.basis[i]] = t.b[i];
    out.value = Rat(0);
    for (int j = 0; j < n; j++) out.value += model.objective[j] * out.x[j];
    return out;
}

// ---------------------------------------------------------------------------
// Branch and bound

namespace {

struct BnbNode {
    std::vector<Constraint> extra;
    Rat parent_bound;
    int id = 0;
};

struct NodeOrder {
    // Best bound first; ties resolved toward the older node.
    bool operator()(const BnbNode& a, const BnbNode& b) const {
        if (a.parent_bound != b.parent_bound) return a.parent_bound < b.parent_bound;
        return a.id > b.id;
    }
};

} // namespace

IlpSolution solve_ilp(const IlpModel& model) {
    constexpr int kNodeLimit = 100000;
    IlpSolution out;

    LpSolution root = solve_lp(model);
    if (root.status == SolveStatus::Infeasible) {
        out.status = SolveStatus::Infeasible;
        return out;
    }
    if (root.status == SolveStatus::Unbounded)
        throw InternalError("flow model unbounded; loop bound constraints missing");
    out.relaxation_value = root.value;

    bool have_incumbent = false;
    Rat best_value;
    std::vector<Rat> best_x;

    std::priority_queue<BnbNode, std::vector<BnbNode>, NodeOrder> open;
    int next_id = 0;
    open.push({{}, root.value, next_id++});

    while (!open.empty()) {
        BnbNode node = open.top();
        open.pop();
        out.nodes_explored++;
        if (out.nodes_explored > kNodeLimit)
            throw AnalysisError("path search exceeded the node limit");
        if (have_incumbent && node.parent_bound <= best_value) continue;

        IlpModel sub = model;
        for (const auto& c : node.extra) sub.constraints.push_back(c);
        LpSolution lp = solve_lp(sub);
        if (lp.status != SolveStatus::Optimal) continue;
        if (have_incumbent && lp.value <= best_value) continue;

        int frac_var = -1;
        Rat frac_score(0);
        for (int j = 0; j < model.num_vars(); j++) {
            if (!model.is_integer[j] || lp.x[j].is_integer()) continue;
            Rat d = lp.x[j].frac_distance();
            if (frac_var < 0 || d > frac_score) { // strict: ties keep the lowest index
                frac_var = j;
                frac_score = d;
            }
        }
        if (frac_var < 0) {
            if (!have_incumbent || lp.value > best_value) {
                have_incumbent = true;
                best_value = lp.value;
                best_x = lp.x;
            }
            continue;
        }

        std::int64_t fl = lp.x[frac_var].floor();
        Constraint down{"bnb_" + model.var_names[frac_var] + "_le", {{Rat(1), frac_var}}, Rel::Le, Rat(fl)};
        Constraint up{"bnb_" + model.var_names[frac_var] + "_ge", {{Rat(1), frac_var}}, Rel::Ge, Rat(fl + 1)};
        BnbNode child_down{node.extra, lp.value, next_id++};
        child_down.extra.push_back(down);
        BnbNode child_up{node.extra, lp.value, next_id++};
        child_up.extra.push_back(up);
        open.push(std::move(child_down));
        open.push(std::move(child_up));
    }

    if (!have_incumbent) {
        out.status = SolveStatus::Infeasible;
        return out;
    }
    out.status = SolveStatus::Optimal;
    out.value = best_value;
    out.x = std::move(best_x);
    return out;
}

// ---------------------------------------------------------------------------
// Flow model construction and bottom-up composition

FunctionModel build_ilp(const Program& prog, const FunctionCfg& f,
                        const std::map<int, std::int64_t>& block_times,
                        const std::vector<LoopBound>& bounds,
                        const std::set<int>& infeasible_edges,
                        const std::map<int, std::int64_t>& callee_wcet) {
    FunctionModel fm;
    IlpModel& m = fm.model;

    for (int bid : f.blocks) {
        const BasicBlock& b = prog.blocks[bid];
        std::int64_t t = block_times.count(bid) ? block_times.at(bid) : 0;
        if (b.term == Terminator::Call) {
            Addr site = b.last().addr;
            for (const auto& cg : prog.callgraph)
                if (cg.call_site == site) t += callee_wcet.at(cg.callee);
        }
        fm.block_var[bid] = m.add_var("x_" + to_hex(b.start), Rat(t));
    }
    fm.entry_var = m.add_var("f_entry", Rat(0));
    for (int eid : f.edges) {
        const Edge& e = prog.edges[eid];
        fm.edge_var[eid] = m.add_var("f_" + to_hex(prog.blocks[e.src].start) + "_" +
                                         to_hex(prog.blocks[e.dst].start) + "_" +
                                         std::to_string(static_cast<int>(e.kind)),
                                     Rat(0));
    }
    std::map<int, int> exit_var;
    for (int bid : f.exit_blocks)
        exit_var[bid] = m.add_var("f_exit_" + to_hex(prog.blocks[bid].start), Rat(0));

    m.constraints.push_back({"entry", {{Rat(1), fm.entry_var}}, Rel::Eq, Rat(1)});

    for (int bid : f.blocks) {
        Constraint cin{"flow_in_" + to_hex(prog.blocks[bid].start), {}, Rel::Eq, Rat(0)};
        if (bid == f.entry_block) cin.terms.push_back({Rat(1), fm.entry_var});
        for (int eid : f.edges)
            if (prog.edges[eid].dst == bid) cin.terms.push_back({Rat(1), fm.edge_var.at(eid)});
        cin.terms.push_back({Rat(-1), fm.block_var.at(bid)});
        m.constraints.push_back(std::move(cin));

        Constraint cout{"flow_out_" + to_hex(prog.blocks[bid].start), {}, Rel::Eq, Rat(0)};
        for (int eid : f.edges)
            if (prog.edges[eid].src == bid) cout.terms.push_back({Rat(1), fm.edge_var.at(eid)});
        if (exit_var.count(bid)) cout.terms.push_back({Rat(1), exit_var.at(bid)});
        cout.terms.push_back({Rat(-1), fm.block_var.at(bid)});
        m.constraints.push_back(std::move(cout));
    }

    for (const auto& loop : f.loops) {
        Addr header = prog.blocks[loop.header].start;
        std::int64_t bound = -1;
        for (const auto& lb : bounds)
            if (lb.header == header) bound = lb.bound;
        if (bound < 0) throw InternalError("missing bound for loop at " + to_hex(header));
        Constraint c{"loop_" + to_hex(header), {}, Rel::Le, Rat(0)};
        c.terms.push_back({Rat(1), fm.block_var.at(loop.header)});
        for (int eid : loop_entry_edges(prog, f, loop))
            c.terms.push_back({Rat(-bound), fm.edge_var.at(eid)});
        if (loop.header == f.entry_block) c.terms.push_back({Rat(-bound), fm.entry_var});
        m.constraints.push_back(std::move(c));
    }

    for (int eid : f.edges)
        if (infeasible_edges.count(eid))
            m.constraints.push_back({"dead_" + std::to_string(eid),
                                     {{Rat(1), fm.edge_var.at(eid)}},
                                     Rel::Eq,
                                     Rat(0)});
    return fm;
}

namespace {

// Independent sanity pass over a returned assignment.
void verify_solution(const Program& prog, const FunctionCfg& f, const FunctionModel& fm,
                     const std::vector<LoopBound>& bounds, const std::set<int>& infeasible_edges,
                     const std::vector<Rat>& x) {
    for (int j = 0; j < fm.model.num_vars(); j++) {
        if (!x[j].is_integer() || x[j] < Rat(0))
            throw InternalError("non-integral or negative count in solution");
    }
    auto val = [&](int var) { return x[var].num(); };
    for (int bid : f.blocks) {
        std::int64_t in_sum = bid == f.entry_block ? val(fm.entry_var) : 0;
        std::int64_t out_sum = 0;
        for (int eid : f.edges) {
            if (prog.edges[eid].dst == bid) in_sum += val(fm.edge_var.at(eid));
            if (prog.edges[eid].src == bid) out_sum += val(fm.edge_var.at(eid));
        }
        bool is_exit = std::find(f.exit_blocks.begin(), f.exit_blocks.end(), bid) != f.exit_blocks.end();
        std::int64_t xb = val(fm.block_var.at(bid));
        if (in_sum != xb) throw InternalError("flow conservation violated (in)");
        if (!is_exit && out_sum != xb) throw InternalError("flow conservation violated (out)");
        if (is_exit && out_sum > xb) throw InternalError("flow conservation violated (exit)");
    }
    for (const auto& loop : f.loops) {
        Addr header = prog.blocks[loop.header].start;
        std::int64_t bound = 0;
        for (const auto& lb : bounds)
            if (lb.header == header) bound = lb.bound;
        std::int64_t entries = loop.header == f.entry_block ? val(fm.entry_var) : 0;
        for (int eid : loop_entry_edges(prog, f, loop)) entries += val(fm.edge_var.at(eid));
        if (val(fm.block_var.at(loop.header)) > bound * entries)
            throw InternalError("loop bound constraint violated in solution");
    }
    for (int eid : f.edges)
        if (infeasible_edges.count(eid) && val(fm.edge_var.at(eid)) != 0)
            throw InternalError("flow on an infeasible edge");
}

} // namespace

WcetResult program_wcet(const Program& prog, const std::map<int, std::int64_t>& block_times,
                        const std::vector<LoopBound>& bounds, const std::set<int>& infeasible_edges,
                        const std::map<Addr, std::int64_t>& callee_stub) {
    WcetResult res;
    std::map<int, std::int64_t> wcet_by_func;
    for (int fi : call_order_bottom_up(prog)) {
        const FunctionCfg& f = prog.funcs[fi];
        auto stub = callee_stub.find(f.entry_addr);
        if (stub != callee_stub.end()) {
            wcet_by_func[fi] = stub->second;
            res.function_wcet[fi] = stub->second;
            continue;
        }
        FunctionModel fm = build_ilp(prog, f, block_times, bounds, infeasible_edges, wcet_by_func);
        IlpSolution sol = solve_ilp(fm.model);
        if (sol.status == SolveStatus::Infeasible)
            throw AnalysisError("conflicting constraints: no feasible path in function " +
                                to_hex(f.entry_addr));
        if (!(sol.relaxation_value >= sol.value))
            throw InternalError("LP relaxation below the integral optimum");
        verify_solution(prog, f, fm, bounds, infeasible_edges, sol.x);

        wcet_by_func[fi] = sol.value.num();
        res.function_wcet[fi] = sol.value.num();
        for (const auto& [bid, var] : fm.block_var) res.block_counts[bid] = sol.x[var].num();
        for (const auto& [eid, var] : fm.edge_var) res.edge_counts[eid] = sol.x[var].num();
    }
    res.global_wcet = res.function_wcet.at(prog.entry_func);
    res.status = SolveStatus::Optimal;
    return res;
}

} // namespace timebound

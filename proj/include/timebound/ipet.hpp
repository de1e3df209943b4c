#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "timebound/cfg.hpp"
#include "timebound/loop_bounds.hpp"
#include "timebound/rational.hpp"
#include "timebound/timing.hpp"

namespace timebound {

enum class Rel { Le, Eq, Ge };

struct LinTerm {
    Rat coef;
    int var = -1;
};

struct Constraint {
    std::string name;
    std::vector<LinTerm> terms;
    Rel rel = Rel::Le;
    Rat rhs;
};

// maximize objective subject to constraints, all variables >= 0.
struct IlpModel {
    std::vector<std::string> var_names;
    std::vector<bool> is_integer;
    std::vector<Rat> objective;
    std::vector<Constraint> constraints;

    int num_vars() const { return static_cast<int>(var_names.size()); }
    int add_var(const std::string& name, Rat obj_coef, bool integer = true);
    // One constraint per line: `<name>: c1*v1 + c2*v2 <op> rhs`.
    std::string to_text() const;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded };

struct LpSolution {
    SolveStatus status = SolveStatus::Infeasible;
    Rat value;
    std::vector<Rat> x;
};

// Exact two-phase primal simplex (Bland's rule) on the LP relaxation.
LpSolution solve_lp(const IlpModel& model);

struct IlpSolution {
    SolveStatus status = SolveStatus::Infeasible;
    Rat value;             // integral at optimality
    std::vector<Rat> x;    // integral assignment
    Rat relaxation_value;  // root LP bound
    int nodes_explored = 0;
};

// Branch and bound over the LP relaxation: most-fractional branching
// (ties to the lowest variable index), best-bound node order, floor/ceil
// child bounds. Throws after 10^5 nodes.
IlpSolution solve_ilp(const IlpModel& model);

// Per-function flow model: virtual entry edge = 1, flow conservation per
// block, x_header <= bound * (entry edges) per loop, zero flow on infeasible
// edges. The objective adds each callee's WCET to its call block.
struct FunctionModel {
    IlpModel model;
    std::map<int, int> block_var; // block id -> variable
    std::map<int, int> edge_var;  // edge id -> variable
    int entry_var = -1;
};

FunctionModel build_ilp(const Program& prog, const FunctionCfg& f,
                        const std::map<int, std::int64_t>& block_times,
                        const std::vector<LoopBound>& bounds,
                        const std::set<int>& infeasible_edges,
                        const std::map<int, std::int64_t>& callee_wcet);

struct WcetResult {
    std::map<int, std::int64_t> function_wcet;       // function index -> cycles
    std::int64_t global_wcet = 0;
    std::map<int, std::int64_t> block_counts;        // block id -> worst-case count
    std::map<int, std::int64_t> edge_counts;         // edge id -> worst-case count
    SolveStatus status = SolveStatus::Optimal;
};

// Bottom-up composition over the acyclic call graph. callee_stub supplies
// trusted cycle counts for functions that are not analyzed.
WcetResult program_wcet(const Program& prog, const std::map<int, std::int64_t>& block_times,
                        const std::vector<LoopBound>& bounds, const std::set<int>& infeasible_edges,
                        const std::map<Addr, std::int64_t>& callee_stub);

} // namespace timebound

#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "timebound/isa.hpp"

namespace timebound {

enum class Terminator { Fallthrough, Branch, Jump, Call, Return, Halt, Indirect };

struct BasicBlock {
    int id = -1;
    Addr start = 0;
    Addr end = 0; // exclusive
    std::vector<Instruction> instrs;
    Terminator term = Terminator::Fallthrough;
    int func = -1;

    Addr last_addr() const { return end - 4; }
    const Instruction& last() const { return instrs.back(); }
};

// Taken/NotTaken/Fallthrough connect blocks within a function. CallFlow is
// the intraprocedural summary edge from a call block to its post-call block;
// CallEnter and Return are the interprocedural edges the dataflow analyses
// propagate along instead.
enum class EdgeKind { Taken, NotTaken, Fallthrough, CallFlow, CallEnter, Return };

const char* edge_kind_name(EdgeKind k);
bool is_intraproc(EdgeKind k);     // part of the per-function graph
bool carries_store(EdgeKind k);    // dataflow propagation edge

struct Edge {
    int id = -1;
    int src = -1;
    int dst = -1;
    EdgeKind kind = EdgeKind::Fallthrough;
};

struct Loop {
    int header = -1;
    std::vector<int> back_edge_srcs;
    std::set<int> body; // block ids, includes header
};

struct FunctionCfg {
    int index = -1;
    Addr entry_addr = 0;
    int entry_block = -1;
    std::vector<int> blocks;      // sorted by start address
    std::vector<int> exit_blocks; // RET / HALT blocks
    std::vector<int> edges;       // intraprocedural edge ids
    std::map<int, int> idom;      // block id -> immediate dominator block id
    std::vector<Loop> loops;
};

struct CallGraphEdge {
    Addr call_site = 0;
    int caller = -1;
    int callee = -1;
};

struct Program {
    ProgramImage image;
    std::vector<BasicBlock> blocks;
    std::vector<Edge> edges; // all kinds
    std::vector<FunctionCfg> funcs;
    std::vector<CallGraphEdge> callgraph;
    std::map<Addr, int> block_starts;
    std::vector<std::vector<int>> out_edges; // block id -> edge ids
    std::vector<std::vector<int>> in_edges;
    std::map<Addr, std::vector<Addr>> jr_targets; // resolution applied to this build
    std::set<Addr> unresolved_jr;                 // JR sites without targets yet

    int entry_func = 0;
    Addr analysis_entry = 0;

    // Block whose [start,end) covers a, or -1.
    int block_containing(Addr a) const;
    const Instruction* instr_at(Addr a) const;
    int func_index_of_entry(Addr a) const;
};

// Decodes from the entry (functions discovered through CALL targets), splits
// blocks at branch targets and after control transfers, and validates that
// functions are disjoint. jr_targets supplies successors for already
// resolved indirect jumps; unresolved JR blocks keep an Indirect terminator
// with no successors.
Program build_cfg(const ProgramImage& image, std::optional<Addr> entry_override = std::nullopt,
                  const std::map<Addr, std::vector<Addr>>& jr_targets = {});

// Iterative dominators over an index-based graph. Unreachable nodes get
// idom -1.
std::vector<int> compute_idom(int n, int entry, const std::vector<std::pair<int, int>>& edges);

void compute_dominators(Program& prog, FunctionCfg& f);

// Natural loops from dominator-identified back edges; back edges sharing a
// header are merged. Throws AnalysisError("irreducible control flow ...") on
// a retreating edge whose target does not dominate its source.
void find_natural_loops(Program& prog, FunctionCfg& f);

// Functions in callee-before-caller order. Throws AnalysisError on recursion.
std::vector<int> call_order_bottom_up(const Program& prog);

// Loop-entry edges: intraprocedural edges into the header from outside the
// body. The set may be empty when the header is the function entry (the
// virtual entry edge enters there).
std::vector<int> loop_entry_edges(const Program& prog, const FunctionCfg& f, const Loop& loop);

} // namespace timebound

#pragma once

#include <map>
#include <string>
#include <vector>

#include "timebound/annotations.hpp"
#include "timebound/isa.hpp"

namespace timebound {

// One test program: `<name>.s` assembly, `<name>.ann` annotations (inputs
// double as the simulation domain), `<name>.props` flags describing which
// end-to-end checks apply.
struct Fixture {
    std::string name;
    std::string source;
    ProgramImage image;
    Annotations ann;
    bool single_path = false;     // analysis must match the oracle exactly
    bool stack_exact = false;     // stack bound must match the oracle exactly
    int expect_infeasible = 0;    // at least this many infeasible edges
    double max_ratio = 2.0;       // WCET / oracle precision ceiling
};

std::vector<Fixture> load_corpus(const std::string& dir);

} // namespace timebound

#pragma once

#include <map>
#include <string>

#include "timebound/driver.hpp"

namespace timebound {

// Plain-text analysis report. Line formats:
//   WCET GLOBAL <n>
//   WCET FUNC <addr> <n>
//   STACK <func> local=<n> total=<n>
//   STACK GLOBAL <n> via <chain>
//   BLOCK <func> <addr> t=<cycles>
//   CACHE <addr> <I|D> <AH|AM|NC>
//   CACHE SUMMARY <I|D> AH=<n> AM=<n> NC=<n>
//   INFEASIBLE <src> <dst> <kind>
//   WARN <text>
std::string emit_report(const AnalysisResult& res);

// One annotated digraph per function. Node label `addr_range\nt=<cycles>
// x=<count>`; worst-case path edges red; infeasible edges dotted.
std::string emit_dot(const AnalysisResult& res, const FunctionCfg& f);

// All functions, keyed by their DOT file name `<func-addr>.dot`.
std::map<std::string, std::string> emit_all_dot(const AnalysisResult& res);

} // namespace timebound

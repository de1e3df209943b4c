#include "timebound/annotations.hpp"

#include <fstream>
#include <sstream>
#include <vector>

#include "timebound/errors.hpp"

namespace timebound {

namespace {

std::int64_t parse_num(const std::string& tok, int line) {
    try {
        std::size_t pos = 0;
        std::int64_t v = std::stoll(tok, &pos, 0); // handles 0x prefixes
        if (pos != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw AsmError(line, "bad number '" + tok + "'");
    }
}

Addr parse_addr(const std::string& tok, int line) {
    std::int64_t v = parse_num(tok, line);
    if (v < 0 || v % 4 != 0) throw AsmError(line, "address must be non-negative and 4-aligned");
    return static_cast<Addr>(v);
}

int parse_reg(const std::string& tok, int line) {
    if (tok.size() >= 2 && (tok[0] == 'r' || tok[0] == 'R')) {
        std::int64_t v = parse_num(tok.substr(1), line);
        if (v >= 0 && v < kStackPointer) return static_cast<int>(v);
    }
    throw AsmError(line, "input register must be r0..r14, got '" + tok + "'");
}

CacheConfig parse_cache(const std::vector<std::string>& toks, int line) {
    if (toks.size() != 5) throw AsmError(line, "cache needs: sets assoc line penalty");
    CacheConfig c;
    c.sets = static_cast<std::uint32_t>(parse_num(toks[1], line));
    c.assoc = static_cast<std::uint32_t>(parse_num(toks[2], line));
    c.line = static_cast<std::uint32_t>(parse_num(toks[3], line));
    c.penalty = static_cast<int>(parse_num(toks[4], line));
    return c;
}

} // namespace

Annotations parse_annotations(const std::string& text) {
    Annotations ann;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        lineno++;
        std::string s = raw;
        std::size_t c = s.find('#');
        if (c != std::string::npos) s = s.substr(0, c);
        std::istringstream ls(s);
        std::vector<std::string> toks;
        std::string tok;
        while (ls >> tok) toks.push_back(tok);
        if (toks.empty()) continue;

        const std::string& key = toks[0];
        if (key == "entry") {
            if (toks.size() != 2) throw AsmError(lineno, "entry needs an address");
            ann.entry = parse_addr(toks[1], lineno);
        } else if (key == "input") {
            if (toks.size() != 4) throw AsmError(lineno, "input needs: reg lo hi");
            int r = parse_reg(toks[1], lineno);
            std::int64_t lo = parse_num(toks[2], lineno);
            std::int64_t hi = parse_num(toks[3], lineno);
            if (lo > hi) throw AsmError(lineno, "empty input range");
            if (lo < INT32_MIN || hi > INT32_MAX) throw AsmError(lineno, "input range outside 32 bits");
            if (ann.inputs.count(r)) throw AsmError(lineno, "duplicate input for r" + std::to_string(r));
            ann.inputs[r] = {static_cast<std::int32_t>(lo), static_cast<std::int32_t>(hi)};
        } else if (key == "loopbound") {
            if (toks.size() != 3) throw AsmError(lineno, "loopbound needs: header count");
            Addr h = parse_addr(toks[1], lineno);
            std::int64_t b = parse_num(toks[2], lineno);
            if (b < 0) throw AsmError(lineno, "loop bound must be >= 0");
            if (ann.loop_bounds.count(h))
                throw AsmError(lineno, "duplicate loopbound for " + to_hex(h));
            ann.loop_bounds[h] = b;
        } else if (key == "callee_bound") {
            if (toks.size() != 3) throw AsmError(lineno, "callee_bound needs: func cycles");
            Addr f = parse_addr(toks[1], lineno);
            std::int64_t b = parse_num(toks[2], lineno);
            if (b < 0) throw AsmError(lineno, "callee bound must be >= 0");
            ann.callee_bounds[f] = b;
        } else if (key == "icache") {
            ann.icache = parse_cache(toks, lineno);
        } else if (key == "dcache") {
            ann.dcache = parse_cache(toks, lineno);
        } else if (key == "stack_init") {
            if (toks.size() != 2) throw AsmError(lineno, "stack_init needs an address");
            ann.stack_init = parse_addr(toks[1], lineno);
        } else if (key == "penalty_i") {
            if (toks.size() != 2) throw AsmError(lineno, "penalty_i needs a cycle count");
            ann.penalty_i = static_cast<int>(parse_num(toks[1], lineno));
        } else if (key == "penalty_d") {
            if (toks.size() != 2) throw AsmError(lineno, "penalty_d needs a cycle count");
            ann.penalty_d = static_cast<int>(parse_num(toks[1], lineno));
        } else {
            throw AsmError(lineno, "unknown annotation key '" + key + "'");
        }
    }
    return ann;
}

Annotations read_annotations(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot read " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_annotations(ss.str());
}

MachineConfig Annotations::apply(MachineConfig base) const {
    if (icache) base.icache = *icache;
    if (dcache) base.dcache = *dcache;
    if (stack_init) base.stack_init = *stack_init;
    if (penalty_i) base.icache.penalty = *penalty_i;
    if (penalty_d) base.dcache.penalty = *penalty_d;
    base.validate();
    return base;
}

} // namespace timebound

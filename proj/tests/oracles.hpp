// Test-only oracles, independent of the analysis implementations they check.
#pragma once

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "timebound/cache.hpp"
#include "timebound/cfg.hpp"
#include "timebound/errors.hpp"
#include "timebound/ipet.hpp"
#include "timebound/loop_bounds.hpp"
#include "timebound/value.hpp"

namespace test_oracles {

using namespace timebound;

// ---------------------------------------------------------------------------
// Interval arithmetic: exhaustive operand enumeration.

inline std::int32_t concrete_alu(Op op, std::int32_t a, std::int32_t b) {
    auto ua = static_cast<std::uint32_t>(a);
    auto ub = static_cast<std::uint32_t>(b);
    switch (op) {
    case Op::Add: return static_cast<std::int32_t>(ua + ub);
    case Op::Sub: return static_cast<std::int32_t>(ua - ub);
    case Op::Mul: return static_cast<std::int32_t>(ua * ub);
    case Op::And: return static_cast<std::int32_t>(ua & ub);
    case Op::Or: return static_cast<std::int32_t>(ua | ub);
    case Op::Shl: return static_cast<std::int32_t>(ua << (ub & 31u));
    case Op::Shr: return static_cast<std::int32_t>(ua >> (ub & 31u));
    default: throw InternalError("not an ALU op");
    }
}

// Checks every interval pair with bounds in [-span, span] against every
// concrete operand pair. Returns the number of containment violations.
inline long interval_conformance_failures(std::int64_t span) {
    static const Op ops[] = {Op::Add, Op::Sub, Op::Mul, Op::And, Op::Or, Op::Shl, Op::Shr};
    long failures = 0;
    for (Op op : ops) {
        for (std::int64_t alo = -span; alo <= span; alo++)
            for (std::int64_t ahi = alo; ahi <= span; ahi++)
                for (std::int64_t blo = -span; blo <= span; blo++)
                    for (std::int64_t bhi = blo; bhi <= span; bhi++) {
                        Interval out = interval_apply(op, Interval::of(alo, ahi), Interval::of(blo, bhi));
                        for (std::int64_t x = alo; x <= ahi; x++)
                            for (std::int64_t y = blo; y <= bhi; y++) {
                                std::int32_t r = concrete_alu(op, static_cast<std::int32_t>(x),
                                                              static_cast<std::int32_t>(y));
                                if (!out.contains(r)) failures++;
                            }
                    }
    }
    return failures;
}

// ---------------------------------------------------------------------------
// Abstract cache domain: exhaustive concrete LRU bracketing.

using ConcreteSet = std::vector<std::uint32_t>; // block numbers, most recent first

inline ConcreteSet concrete_access(ConcreteSet s, std::uint32_t b, std::uint32_t assoc) {
    auto it = std::find(s.begin(), s.end(), b);
    if (it != s.end()) s.erase(it);
    s.insert(s.begin(), b);
    if (s.size() > assoc) s.pop_back();
    return s;
}

inline bool cache_consistent(const AbstractCache& a, const ConcreteSet& s) {
    for (const auto& [b, age] : a.must[0]) {
        auto it = std::find(s.begin(), s.end(), b);
        if (it == s.end()) return false;
        if (static_cast<int>(it - s.begin()) > age) return false;
    }
    for (std::size_t pos = 0; pos < s.size(); pos++) {
        auto it = a.may[0].find(s[pos]);
        if (it == a.may[0].end()) return false;
        if (it->second > static_cast<int>(pos)) return false;
    }
    return true;
}

inline std::vector<ConcreteSet> all_consistent(const AbstractCache& a, std::uint32_t blocks,
                                               std::uint32_t assoc) {
    std::vector<ConcreteSet> out;
    std::vector<ConcreteSet> frontier{{}};
    for (std::uint32_t len = 0; len <= assoc; len++) {
        for (const auto& s : frontier)
            if (s.size() == len && cache_consistent(a, s)) out.push_back(s);
        std::vector<ConcreteSet> next;
        for (const auto& s : frontier) {
            if (s.size() != len) continue;
            for (std::uint32_t b = 0; b < blocks; b++) {
                if (std::find(s.begin(), s.end(), b) != s.end()) continue;
                ConcreteSet t = s;
                t.push_back(b);
                next.push_back(t);
            }
        }
        frontier = std::move(next);
    }
    return out;
}

struct CacheConformanceStats {
    long cases = 0;
    long failures = 0;
};

// Random update/join sequences (single set, small block universe) checked
// against exhaustive concrete LRU simulation from every consistent start.
inline CacheConformanceStats run_cache_conformance(long iterations, unsigned seed) {
    std::mt19937 rng(seed);
    CacheConformanceStats stats;
    while (stats.cases < iterations) {
        std::uint32_t assoc = 1 + rng() % 4;
        std::uint32_t blocks = 2 + rng() % 5;
        CacheConfig cfg;
        cfg.sets = 1;
        cfg.assoc = assoc;
        cfg.line = 16;

        AbstractCache abs(cfg);
        std::vector<ConcreteSet> concrete{{}};
        if (rng() % 2) {
            for (std::uint32_t b = 0; b < blocks; b++) {
                if (rng() % 3 == 0) {
                    int age = static_cast<int>(rng() % assoc);
                    abs.may[0][b] = age;
                    if (rng() % 2) abs.must[0][b] = age + static_cast<int>(rng() % (assoc - age));
                }
            }
            concrete = all_consistent(abs, blocks, assoc);
            if (concrete.empty()) continue; // vacuous start
        }

        auto dedup = [](std::vector<ConcreteSet> v) {
            std::sort(v.begin(), v.end());
            v.erase(std::unique(v.begin(), v.end()), v.end());
            return v;
        };

        int steps = 1 + rng() % 12;
        for (int i = 0; i < steps; i++) {
            int kind = rng() % 8;
            if (kind < 5) {
                std::uint32_t b = rng() % blocks;
                acache_update(abs, b);
                for (auto& s : concrete) s = concrete_access(s, b, assoc);
            } else if (kind < 7) {
                std::uint32_t b1 = rng() % blocks;
                std::uint32_t b2 = rng() % blocks;
                acache_update_range(abs, b1 == b2 ? std::vector<std::uint32_t>{b1}
                                                  : std::vector<std::uint32_t>{b1, b2});
                std::vector<ConcreteSet> next;
                for (const auto& s : concrete) {
                    next.push_back(concrete_access(s, b1, assoc));
                    if (b1 != b2) next.push_back(concrete_access(s, b2, assoc));
                }
                concrete = dedup(std::move(next));
            } else {
                std::uint32_t b1 = rng() % blocks;
                std::uint32_t b2 = rng() % blocks;
                AbstractCache left = abs;
                AbstractCache right = abs;
                acache_update(left, b1);
                acache_update(right, b2);
                abs = acache_join(left, right);
                std::vector<ConcreteSet> next;
                for (const auto& s : concrete) {
                    next.push_back(concrete_access(s, b1, assoc));
                    next.push_back(concrete_access(s, b2, assoc));
                }
                concrete = dedup(std::move(next));
            }
            abs.check_invariant();
            for (const auto& s : concrete)
                if (!cache_consistent(abs, s)) stats.failures++;
        }
        stats.cases++;
    }
    return stats;
}

// ---------------------------------------------------------------------------
// Worst path: exhaustive enumeration with per-entry loop budgets.

struct PathOracle {
    const Program& prog;
    const FunctionCfg& f;
    const std::map<int, std::int64_t>& times;
    const std::vector<LoopBound>& bounds;
    const std::set<int>& infeasible;
    std::int64_t best = -1;

    std::int64_t bound_of(int header) const {
        Addr h = prog.blocks[header].start;
        for (const auto& lb : bounds)
            if (lb.header == h) return lb.bound;
        return -1;
    }

    void walk(int block, std::int64_t cost, std::map<int, std::int64_t>& execs, int depth) {
        if (depth > 4000) throw InternalError("oracle path too long");
        cost += times.at(block);
        for (const auto& loop : f.loops) {
            if (loop.header != block) continue;
            execs[block]++;
            if (execs[block] > bound_of(block)) {
                execs[block]--;
                return;
            }
        }
        bool is_exit = std::find(f.exit_blocks.begin(), f.exit_blocks.end(), block) !=
                       f.exit_blocks.end();
        if (is_exit) best = std::max(best, cost);
        for (int eid : f.edges) {
            const Edge& e = prog.edges[eid];
            if (e.src != block || infeasible.count(eid)) continue;
            std::map<int, std::int64_t> saved = execs;
            for (const auto& loop : f.loops)
                if (loop.header == e.dst && !loop.body.count(block)) execs[e.dst] = 0;
            walk(e.dst, cost, execs, depth + 1);
            execs = saved;
        }
        for (const auto& loop : f.loops)
            if (loop.header == block) execs[block]--;
    }

    std::int64_t run() {
        std::map<int, std::int64_t> execs;
        walk(f.entry_block, 0, execs, 0);
        return best;
    }
};

} // namespace test_oracles

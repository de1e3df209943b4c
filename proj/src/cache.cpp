#include "timebound/cache.hpp"

#include <algorithm>
#include <deque>
#include <set>

#include "timebound/errors.hpp"

namespace timebound {

void AbstractCache::check_invariant() const {
    for (std::uint32_t s = 0; s < cfg.sets; s++) {
        for (const auto& [b, age] : must[s]) {
            auto it = may[s].find(b);
            if (it == may[s].end())
                throw InternalError("must entry missing from may");
            if (it->second > age)
                throw InternalError("may min-age exceeds must max-age");
            if (age < 0 || age >= static_cast<int>(cfg.assoc))
                throw InternalError("must age out of range");
        }
        for (const auto& [b, age] : may[s]) {
            (void)b;
            if (age < 0 || age >= static_cast<int>(cfg.assoc))
                throw InternalError("may age out of range");
        }
    }
}

void acache_update(AbstractCache& c, std::uint32_t block) {
    std::uint32_t s = c.cfg.set_of_block(block);
    int assoc = static_cast<int>(c.cfg.assoc);

    auto& must = c.must[s];
    int old_age = must.count(block) ? must.at(block) : assoc;
    for (auto it = must.begin(); it != must.end();) {
        if (it->first != block && it->second < old_age) {
            if (++it->second >= assoc) {
                it = must.erase(it);
                continue;
            }
        }
        ++it;
    }
    must[block] = 0;

    auto& may = c.may[s];
    bool definite_insert = !may.count(block); // guaranteed miss: everything ages
    if (definite_insert) {
        for (auto it = may.begin(); it != may.end();) {
            if (++it->second >= assoc) it = may.erase(it);
            else ++it;
        }
    }
    may[block] = 0;
}

void acache_update_range(AbstractCache& c, const std::vector<std::uint32_t>& blocks) {
    if (blocks.size() == 1) {
        acache_update(c, blocks[0]);
        return;
    }
    int assoc = static_cast<int>(c.cfg.assoc);
    std::set<std::uint32_t> sets_touched;
    for (std::uint32_t b : blocks) sets_touched.insert(c.cfg.set_of_block(b));
    for (std::uint32_t s : sets_touched) {
        auto& must = c.must[s];
        for (auto it = must.begin(); it != must.end();) {
            if (++it->second >= assoc) it = must.erase(it);
            else ++it;
        }
    }
    for (std::uint32_t b : blocks) {
        auto& may = c.may[c.cfg.set_of_block(b)];
        may[b] = 0; // possibly most recent now; existing entries keep their bounds
    }
}

AbstractCache acache_join(const AbstractCache& a, const AbstractCache& b) {
    if (!(a.cfg.sets == b.cfg.sets && a.cfg.assoc == b.cfg.assoc && a.cfg.line == b.cfg.line))
        throw InternalError("joining caches with different configurations");
    AbstractCache out(a.cfg);
    for (std::uint32_t s = 0; s < a.cfg.sets; s++) {
        for (const auto& [blk, age] : a.must[s]) {
            auto it = b.must[s].find(blk);
            if (it != b.must[s].end()) out.must[s][blk] = std::max(age, it->second);
        }
        out.may[s] = a.may[s];
        for (const auto& [blk, age] : b.may[s]) {
            auto it = out.may[s].find(blk);
            if (it == out.may[s].end()) out.may[s][blk] = age;
            else it->second = std::min(it->second, age);
        }
    }
    return out;
}

AccessClass acache_classify(const AbstractCache& c, std::uint32_t block) {
    std::uint32_t s = c.cfg.set_of_block(block);
    if (c.must[s].count(block)) return AccessClass::AlwaysHit;
    if (!c.may[s].count(block)) return AccessClass::AlwaysMiss;
    return AccessClass::NotClassified;
}

std::vector<std::uint32_t> access_blocks(const CacheConfig& cfg, const Interval& addrs,
                                         std::uint32_t mem_size) {
    if (addrs.is_bottom()) return {};
    std::int64_t lo = std::max<std::int64_t>(addrs.lo, 0);
    std::int64_t hi = std::min<std::int64_t>(addrs.hi + 3, static_cast<std::int64_t>(mem_size) - 1);
    if (lo > hi) return {};
    std::vector<std::uint32_t> out;
    for (std::uint32_t b = cfg.block_of(static_cast<Addr>(lo)); b <= cfg.block_of(static_cast<Addr>(hi)); b++)
        out.push_back(b);
    return out;
}

AccessClass Classification::fetch_at(Addr a) const {
    auto it = fetch.find(a);
    return it == fetch.end() ? AccessClass::NotClassified : it->second;
}

AccessClass Classification::data_at(Addr a) const {
    auto it = data.find(a);
    return it == data.end() ? AccessClass::NotClassified : it->second;
}

namespace {

struct CachePair {
    AbstractCache icache;
    AbstractCache dcache;
    bool operator==(const CachePair&) const = default;
};

CachePair transfer_block(const ValueResults& vr, const MachineConfig& mcfg,
                         const BasicBlock& b, CachePair state, Classification* record) {
    for (const auto& in : b.instrs) {
        if (record)
            record->fetch[in.addr] = acache_classify(state.icache, mcfg.icache.block_of(in.addr));
        acache_update(state.icache, mcfg.icache.block_of(in.addr));
        if (in.is_memory()) {
            auto it = vr.accesses.find(in.addr);
            Interval addrs = it != vr.accesses.end() ? it->second.addrs : Interval::bottom();
            auto blocks = access_blocks(mcfg.dcache, addrs, mcfg.mem_size);
            if (record) {
                AccessClass c = AccessClass::NotClassified;
                if (blocks.size() == 1) c = acache_classify(state.dcache, blocks[0]);
                record->data[in.addr] = c;
            }
            if (!blocks.empty()) acache_update_range(state.dcache, blocks);
        }
    }
    return state;
}

} // namespace

CacheResults classify(const Program& prog, const ValueResults& vr, const MachineConfig& mcfg) {
    CacheResults res;
    std::map<int, CachePair> in_state;
    std::map<int, CachePair> edge_state;

    int entry_block = prog.funcs[prog.entry_func].entry_block;
    CachePair cold{AbstractCache(mcfg.icache), AbstractCache(mcfg.dcache)};
    in_state[entry_block] = cold;

    std::deque<int> work{entry_block};
    std::set<int> queued{entry_block};
    std::vector<int> visits(prog.blocks.size(), 0);
    while (!work.empty()) {
        int bid = work.front();
        work.pop_front();
        queued.erase(bid);
        if (++visits[bid] > 10000)
            throw InternalError("cache analysis did not stabilize at block " +
                                to_hex(prog.blocks[bid].start));

        CachePair out = transfer_block(vr, mcfg, prog.blocks[bid], in_state.at(bid), nullptr);
        for (int eid : prog.out_edges[bid]) {
            const Edge& e = prog.edges[eid];
            if (!carries_store(e.kind) || vr.infeasible_edges.count(eid)) continue;
            auto it = edge_state.find(eid);
            if (it != edge_state.end() && it->second == out) continue;
            edge_state[eid] = out;
            // Recompute destination input as the join over its live edges.
            CachePair next = out;
            bool first = true;
            for (int ein : prog.in_edges[e.dst]) {
                auto es = edge_state.find(ein);
                if (es == edge_state.end()) continue;
                if (first) {
                    next = es->second;
                    first = false;
                } else {
                    next.icache = acache_join(next.icache, es->second.icache);
                    next.dcache = acache_join(next.dcache, es->second.dcache);
                }
            }
            if (e.dst == entry_block) {
                next.icache = acache_join(next.icache, cold.icache);
                next.dcache = acache_join(next.dcache, cold.dcache);
            }
            auto cur = in_state.find(e.dst);
            if (cur == in_state.end() || !(cur->second == next)) {
                in_state[e.dst] = next;
                if (queued.insert(e.dst).second) work.push_back(e.dst);
            }
        }
    }

    for (const auto& [bid, state] : in_state) {
        transfer_block(vr, mcfg, prog.blocks[bid], state, &res.cls);
        res.block_entry[bid] = {state.icache, state.dcache, true};
    }
    // Blocks never reached stay unclassified.
    for (const auto& b : prog.blocks)
        if (!res.block_entry.count(b.id)) res.block_entry[b.id] = {AbstractCache(mcfg.icache),
                                                                   AbstractCache(mcfg.dcache), false};
    return res;
}

} // namespace timebound

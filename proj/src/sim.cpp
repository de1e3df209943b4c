#include "timebound/sim.hpp"

#include <algorithm>
#include <sstream>

#include "timebound/errors.hpp"
#include "timebound/timing.hpp"

namespace timebound {

namespace {

// Concrete set-associative LRU cache. Each set holds block numbers in
// recency order, most recent first.
class ConcreteCache {
public:
    explicit ConcreteCache(const CacheConfig& cfg) : cfg_(cfg), sets_(cfg.sets) {}

    bool access(Addr a) {
        std::uint32_t block = cfg_.block_of(a);
        auto& set = sets_[cfg_.set_of_block(block)];
        auto it = std::find(set.begin(), set.end(), block);
        bool hit = it != set.end();
        if (hit) set.erase(it);
        set.insert(set.begin(), block);
        if (set.size() > cfg_.assoc) set.pop_back();
        return hit;
    }

private:
    CacheConfig cfg_;
    std::vector<std::vector<std::uint32_t>> sets_;
};

struct Machine {
    const ProgramImage& image;
    const MachineConfig& mcfg;
    std::vector<std::uint8_t> mem;
    std::array<std::uint32_t, kNumRegs> regs{};
    Addr pc;
    ConcreteCache icache;
    ConcreteCache dcache;

    Machine(const ProgramImage& img, const MachineConfig& cfg)
        : image(img), mcfg(cfg), mem(cfg.mem_size, 0), pc(img.entry),
          icache(cfg.icache), dcache(cfg.dcache) {
        std::copy(img.code.begin(), img.code.end(), mem.begin() + img.load_address);
        regs[kStackPointer] = cfg.stack_init;
    }

    std::uint32_t load32(Addr a, Addr site) {
        if (a % 4 != 0) throw TrapError(site, "misaligned access to " + to_hex(a) + " at " + to_hex(site));
        if (static_cast<std::uint64_t>(a) + 4 > mem.size())
            throw TrapError(site, "access to " + to_hex(a) + " outside memory at " + to_hex(site));
        return static_cast<std::uint32_t>(mem[a]) | (static_cast<std::uint32_t>(mem[a + 1]) << 8) |
               (static_cast<std::uint32_t>(mem[a + 2]) << 16) | (static_cast<std::uint32_t>(mem[a + 3]) << 24);
    }

    void store32(Addr a, std::uint32_t v, Addr site) {
        if (a % 4 != 0) throw TrapError(site, "misaligned access to " + to_hex(a) + " at " + to_hex(site));
        if (static_cast<std::uint64_t>(a) + 4 > mem.size())
            throw TrapError(site, "access to " + to_hex(a) + " outside memory at " + to_hex(site));
        mem[a] = static_cast<std::uint8_t>(v & 0xFF);
        mem[a + 1] = static_cast<std::uint8_t>((v >> 8) & 0xFF);
        mem[a + 2] = static_cast<std::uint8_t>((v >> 16) & 0xFF);
        mem[a + 3] = static_cast<std::uint8_t>((v >> 24) & 0xFF);
    }
};

} // namespace

Trace run(const ProgramImage& image, const MachineConfig& mcfg,
          const std::map<int, std::int32_t>& inputs, std::uint64_t cycle_budget) {
    image.validate();
    mcfg.validate();
    for (const auto& [r, v] : inputs) {
        (void)v;
        if (r < 0 || r >= kStackPointer)
            throw UsageError("inputs may assign r0..r14 only, got register " + std::to_string(r));
    }

    Machine m(image, mcfg);
    for (const auto& [r, v] : inputs) m.regs[r] = static_cast<std::uint32_t>(v);

    Trace trace;
    Addr min_sp = mcfg.stack_init;
    // Pipeline recurrence state, carried across the whole run.
    std::uint64_t fetch_avail = 0;
    std::uint64_t exec_done = 0;

    while (true) {
        if (m.pc % 4 != 0) throw TrapError(m.pc, "misaligned pc " + to_hex(m.pc));
        if (static_cast<std::uint64_t>(m.pc) + 4 > m.mem.size())
            throw TrapError(m.pc, "pc " + to_hex(m.pc) + " outside memory");
        std::uint32_t word = m.load32(m.pc, m.pc);
        Instruction in = decode_instruction(word, m.pc);

        auto& obs = trace.observations[in.addr];
        for (int r = 0; r < kNumRegs; r++) obs[r].insert(static_cast<std::int32_t>(m.regs[r]));
        trace.exec_path.push_back(in.addr);

        bool i_hit = m.icache.access(in.addr);
        trace.access_log.push_back({in.addr, 'I', i_hit});

        Addr next = in.next_addr();
        bool taken = false;
        bool has_d = false;
        bool d_hit = false;
        auto s32 = [&](int r) { return static_cast<std::int32_t>(m.regs[r]); };

        switch (in.op) {
        case Op::Halt:
            break;
        case Op::Movi:
            m.regs[in.rd] = static_cast<std::uint32_t>(in.imm);
            break;
        case Op::Add:
            m.regs[in.rd] = m.regs[in.rs1] + m.regs[in.rs2];
            break;
        case Op::Sub:
            m.regs[in.rd] = m.regs[in.rs1] - m.regs[in.rs2];
            break;
        case Op::Mul:
            m.regs[in.rd] = m.regs[in.rs1] * m.regs[in.rs2];
            break;
        case Op::Addi:
            m.regs[in.rd] = m.regs[in.rs1] + static_cast<std::uint32_t>(in.imm);
            break;
        case Op::And:
            m.regs[in.rd] = m.regs[in.rs1] & m.regs[in.rs2];
            break;
        case Op::Or:
            m.regs[in.rd] = m.regs[in.rs1] | m.regs[in.rs2];
            break;
        case Op::Shl:
            m.regs[in.rd] = m.regs[in.rs1] << (m.regs[in.rs2] & 31u);
            break;
        case Op::Shr:
            m.regs[in.rd] = m.regs[in.rs1] >> (m.regs[in.rs2] & 31u);
            break;
        case Op::Ld: {
            Addr a = m.regs[in.rs1] + static_cast<std::uint32_t>(in.imm);
            std::uint32_t v = m.load32(a, in.addr);
            has_d = true;
            d_hit = m.dcache.access(a);
            m.regs[in.rd] = v;
            break;
        }
        case Op::St: {
            Addr a = m.regs[in.rs1] + static_cast<std::uint32_t>(in.imm);
            m.store32(a, m.regs[in.rd], in.addr);
            has_d = true;
            d_hit = m.dcache.access(a);
            break;
        }
        case Op::Beq:
            taken = s32(in.rs1) == s32(in.rs2);
            break;
        case Op::Bne:
            taken = s32(in.rs1) != s32(in.rs2);
            break;
        case Op::Blt:
            taken = s32(in.rs1) < s32(in.rs2);
            break;
        case Op::Bge:
            taken = s32(in.rs1) >= s32(in.rs2);
            break;
        case Op::Jmp:
            next = static_cast<Addr>(in.imm);
            taken = true;
            break;
        case Op::Call: {
            Addr sp = m.regs[kStackPointer] - 4;
            m.store32(sp, in.next_addr(), in.addr);
            has_d = true;
            d_hit = m.dcache.access(sp);
            m.regs[kStackPointer] = sp;
            next = static_cast<Addr>(in.imm);
            taken = true;
            break;
        }
        case Op::Ret: {
            Addr sp = m.regs[kStackPointer];
            std::uint32_t ra = m.load32(sp, in.addr);
            has_d = true;
            d_hit = m.dcache.access(sp);
            m.regs[kStackPointer] = sp + 4;
            next = ra;
            taken = true;
            break;
        }
        case Op::Jr:
            next = m.regs[in.rs1];
            taken = true;
            break;
        }
        if (in.is_branch() && taken) next = in.branch_target();
        if (has_d) trace.access_log.push_back({in.addr, 'D', d_hit});

        // Shared recurrence (see timing.hpp).
        std::uint64_t fetch_done = fetch_avail + static_cast<std::uint64_t>(fetch_latency(!i_hit, mcfg));
        std::uint64_t exec_start = std::max(fetch_done, exec_done);
        exec_done = exec_start + static_cast<std::uint64_t>(exec_latency(in, taken, has_d && !d_hit, mcfg));
        fetch_avail = taken ? exec_done : fetch_done;

        min_sp = std::min(min_sp, static_cast<Addr>(m.regs[kStackPointer]));
        trace.events.push_back({in.addr, in.op, exec_done, i_hit, has_d, d_hit,
                                static_cast<Addr>(m.regs[kStackPointer])});

        if (exec_done > cycle_budget)
            throw TrapError(in.addr, "cycle budget exhausted at " + to_hex(in.addr));
        if (in.op == Op::Halt) {
            trace.halted = true;
            break;
        }
        m.pc = next;
    }

    trace.total_cycles = exec_done;
    trace.max_stack_depth = mcfg.stack_init - min_sp;
    return trace;
}

std::string Trace::to_text() const {
    std::ostringstream os;
    for (const auto& e : events) {
        os << "CYCLE " << e.done_cycle << " ADDR " << to_hex(e.addr) << " " << mnemonic(e.op)
           << " I:" << (e.i_hit ? "hit" : "miss");
        if (e.has_d) os << " D:" << (e.d_hit ? "hit" : "miss");
        os << " SP=" << to_hex(e.sp_after) << "\n";
    }
    return os.str();
}

ExhaustiveResult exhaustive_run(const ProgramImage& image, const MachineConfig& mcfg,
                                const std::map<int, std::pair<std::int32_t, std::int32_t>>& domain,
                                std::uint64_t cycle_budget) {
    std::uint64_t combos = 1;
    std::vector<std::pair<int, std::pair<std::int32_t, std::int32_t>>> dims(domain.begin(), domain.end());
    for (const auto& [r, range] : dims) {
        (void)r;
        if (range.second < range.first) throw UsageError("empty input range");
        combos *= static_cast<std::uint64_t>(range.second) - range.first + 1;
        if (combos > (1ull << 20)) throw UsageError("input domain exceeds 2^20 combinations");
    }

    ExhaustiveResult result;
    std::map<std::pair<Addr, char>, std::pair<std::uint64_t, std::uint64_t>> hit_miss;
    std::vector<std::int64_t> cur(dims.size());
    for (std::size_t i = 0; i < dims.size(); i++) cur[i] = dims[i].second.first;

    while (true) {
        std::map<int, std::int32_t> inputs;
        for (std::size_t i = 0; i < dims.size(); i++)
            inputs[dims[i].first] = static_cast<std::int32_t>(cur[i]);
        Trace t = run(image, mcfg, inputs, cycle_budget);
        result.runs++;
        result.max_cycles = std::max(result.max_cycles, t.total_cycles);
        result.max_stack_depth = std::max(result.max_stack_depth, t.max_stack_depth);
        for (const auto& [addr, per_reg] : t.observations) {
            auto& dst = result.observations[addr];
            for (int r = 0; r < kNumRegs; r++) dst[r].insert(per_reg[r].begin(), per_reg[r].end());
        }
        for (const auto& a : t.access_log) {
            auto& hm = hit_miss[{a.at, a.kind}];
            if (a.hit) hm.first++;
            else hm.second++;
        }

        std::size_t d = 0;
        for (; d < dims.size(); d++) {
            if (cur[d] < dims[d].second.second) {
                cur[d]++;
                break;
            }
            cur[d] = dims[d].second.first;
        }
        if (d == dims.size()) break; // wrapped every dimension (or no dimensions)
    }

    for (const auto& [key, hm] : hit_miss) {
        MergedAccess c = MergedAccess::Mixed;
        if (hm.second == 0) c = MergedAccess::EveryRunHit;
        else if (hm.first == 0) c = MergedAccess::EveryRunMiss;
        result.access_classes[key] = c;
    }
    return result;
}

} // namespace timebound

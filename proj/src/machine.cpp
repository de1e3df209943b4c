#include "timebound/machine.hpp"

#include "timebound/errors.hpp"

namespace timebound {

namespace {
bool power_of_two(std::uint32_t v) { return v != 0 && (v & (v - 1)) == 0; }
} // namespace

void CacheConfig::validate(std::uint32_t mem_size) const {
    if (!power_of_two(sets)) throw UsageError("cache sets must be a power of two");
    if (assoc < 1 || assoc > 8) throw UsageError("cache associativity must be in 1..8");
    if (!power_of_two(line) || line < 4)
        throw UsageError("cache line size must be a power of two >= 4");
    if (static_cast<std::uint64_t>(sets) * assoc * line > mem_size)
        throw UsageError("cache larger than memory");
    if (penalty < 0) throw UsageError("cache penalty must be >= 0");
}

void MachineConfig::validate() const {
    if (mem_size == 0 || mem_size % 4 != 0) throw UsageError("memory size must be a positive multiple of 4");
    if (stack_init % 4 != 0 || stack_init >= mem_size)
        throw UsageError("stack_init must be 4-aligned and within memory");
    if (mul_cycles < 1 || taken_flush < 0) throw UsageError("bad timing parameters");
    icache.validate(mem_size);
    dcache.validate(mem_size);
}

} // namespace timebound

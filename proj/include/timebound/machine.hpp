#pragma once

#include <cstdint>

#include "timebound/isa.hpp"

namespace timebound {

struct CacheConfig {
    std::uint32_t sets = 16;
    std::uint32_t assoc = 2;
    std::uint32_t line = 16; // bytes; >= 4 so a word access touches one line
    int penalty = 10;        // miss cycles

    std::uint32_t block_of(Addr a) const { return a / line; }
    std::uint32_t set_of_block(std::uint32_t block) const { return block % sets; }
    void validate(std::uint32_t mem_size) const;
    bool operator==(const CacheConfig&) const = default;
};

struct MachineConfig {
    std::uint32_t mem_size = 65536;
    Addr stack_init = 0xFF00;
    CacheConfig icache{};
    CacheConfig dcache{};
    int mul_cycles = 3;
    int taken_flush = 2;

    int penalty_i() const { return icache.penalty; }
    int penalty_d() const { return dcache.penalty; }
    void validate() const;
};

} // namespace timebound

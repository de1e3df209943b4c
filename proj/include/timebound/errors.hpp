#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace timebound {

// Program cannot be soundly analyzed (unbounded loop, recursion, unresolved
// indirect jump, irreducible control flow, lost stack pointer, ...).
// The CLI maps this to exit code 2.
class AnalysisError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed assembly source. Message carries the line number.
class AsmError : public std::runtime_error {
public:
    AsmError(int line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line(line) {}
    int line;
};

// Instruction word does not encode any instruction.
class DecodeError : public std::runtime_error {
public:
    DecodeError(std::uint32_t addr, std::uint32_t word, const std::string& what)
        : std::runtime_error(what), addr(addr), word(word) {}
    std::uint32_t addr;
    std::uint32_t word;
};

// Instruction violates a field-width or alignment constraint.
class EncodeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Concrete machine fault in the simulator. Carries the faulting address.
class TrapError : public std::runtime_error {
public:
    TrapError(std::uint32_t addr, const std::string& what)
        : std::runtime_error(what), addr(addr) {}
    std::uint32_t addr;
};

// Bad command line or unusable input file. Exit code 1.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Broken internal invariant; always a bug in this tool.
class InternalError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

std::string to_hex(std::uint32_t v);

} // namespace timebound

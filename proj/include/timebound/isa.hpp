#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "timebound/errors.hpp"

namespace timebound {

using Addr = std::uint32_t;

// 32-bit RISC instruction set. 16 general registers, r15 is the stack
// pointer. Fixed 4-byte little-endian instruction words, byte-addressed
// memory, all word accesses 4-aligned.
//
// Word layout: opcode [31:24], rd [23:20], rs1 [19:16], rs2 [15:12],
// imm12 signed [11:0]. MOVI uses imm16 signed [15:0]; JMP/CALL use imm24
// unsigned [23:0] (absolute byte address). Unused fields must be zero.
enum class Op : std::uint8_t {
    Halt = 0x00,
    Movi = 0x01,
    Add = 0x02,
    Sub = 0x03,
    Mul = 0x04,
    Addi = 0x05,
    And = 0x06,
    Or = 0x07,
    Shl = 0x08,
    Shr = 0x09,
    Ld = 0x10,
    St = 0x11,
    Beq = 0x20,
    Bne = 0x21,
    Blt = 0x22,
    Bge = 0x23,
    Jmp = 0x30,
    Call = 0x31,
    Ret = 0x32,
    Jr = 0x33,
};

constexpr int kNumRegs = 16;
constexpr int kStackPointer = 15;

struct Instruction {
    Op op = Op::Halt;
    int rd = 0;
    int rs1 = 0;
    int rs2 = 0;
    std::int32_t imm = 0; // sign-extended imm12/imm16, or unsigned imm24 for JMP/CALL
    Addr addr = 0;

    bool is_branch() const {
        return op == Op::Beq || op == Op::Bne || op == Op::Blt || op == Op::Bge;
    }
    // Instructions that touch data memory: LD/ST plus the CALL push and RET pop.
    bool is_memory() const {
        return op == Op::Ld || op == Op::St || op == Op::Call || op == Op::Ret;
    }
    // Control transfers that end a basic block.
    bool is_control() const {
        return is_branch() || op == Op::Jmp || op == Op::Call || op == Op::Ret ||
               op == Op::Jr || op == Op::Halt;
    }
    // Transfers whose taken path flushes the fetch stage.
    bool is_taken_transfer_kind() const {
        return is_branch() || op == Op::Jmp || op == Op::Call || op == Op::Ret || op == Op::Jr;
    }
    // Branch offsets are in instruction units relative to the next instruction.
    Addr branch_target() const {
        return static_cast<Addr>(static_cast<std::int64_t>(addr) + 4 + 4 * static_cast<std::int64_t>(imm));
    }
    Addr next_addr() const { return addr + 4; }

    bool operator==(const Instruction&) const = default;
};

std::uint32_t encode_instruction(const Instruction& instr);
Instruction decode_instruction(std::uint32_t word, Addr addr);

const char* mnemonic(Op op);
std::string format_instruction(const Instruction& instr);
std::string register_name(int r);

// Loadable binary. File container: magic "TWCA", u32le entry address,
// u32le code length in bytes, then code. Images load at address 0.
struct ProgramImage {
    Addr entry = 0;
    std::vector<std::uint8_t> code;
    Addr load_address = 0;

    Addr code_end() const { return load_address + static_cast<Addr>(code.size()); }
    bool contains(Addr a) const { return a >= load_address && a < code_end(); }
    std::uint32_t word_at(Addr a) const;
    void validate() const;
};

// Two-pass assembler. One instruction or label per line; labels `name:`;
// directives `.entry <label|addr>` and `.org <addr>`; `#` or `;` comments.
ProgramImage assemble(const std::string& source);

std::vector<std::uint8_t> image_to_bytes(const ProgramImage& image);
ProgramImage image_from_bytes(const std::vector<std::uint8_t>& bytes);
void write_image(const std::string& path, const ProgramImage& image);
ProgramImage read_image(const std::string& path);

} // namespace timebound

#include "timebound/isa.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

namespace timebound {

std::string to_hex(std::uint32_t v) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "0x%x", v);
    return buf;
}

namespace {

struct OpInfo {
    Op op;
    const char* name;
    enum Form { None, RdImm16, ThreeReg, RdRs1Imm12, Mem, BranchForm, Imm24, Rs1Only } form;
};

const OpInfo kOps[] = {
    {Op::Halt, "HALT", OpInfo::None},
    {Op::Movi, "MOVI", OpInfo::RdImm16},
    {Op::Add, "ADD", OpInfo::ThreeReg},
    {Op::Sub, "SUB", OpInfo::ThreeReg},
    {Op::Mul, "MUL", OpInfo::ThreeReg},
    {Op::Addi, "ADDI", OpInfo::RdRs1Imm12},
    {Op::And, "AND", OpInfo::ThreeReg},
    {Op::Or, "OR", OpInfo::ThreeReg},
    {Op::Shl, "SHL", OpInfo::ThreeReg},
    {Op::Shr, "SHR", OpInfo::ThreeReg},
    {Op::Ld, "LD", OpInfo::Mem},
    {Op::St, "ST", OpInfo::Mem},
    {Op::Beq, "BEQ", OpInfo::BranchForm},
    {Op::Bne, "BNE", OpInfo::BranchForm},
    {Op::Blt, "BLT", OpInfo::BranchForm},
    {Op::Bge, "BGE", OpInfo::BranchForm},
    {Op::Jmp, "JMP", OpInfo::Imm24},
    {Op::Call, "CALL", OpInfo::Imm24},
    {Op::Ret, "RET", OpInfo::None},
    {Op::Jr, "JR", OpInfo::Rs1Only},
};

const OpInfo* op_info(Op op) {
    for (const auto& i : kOps)
        if (i.op == op) return &i;
    return nullptr;
}

const OpInfo* op_info_by_name(const std::string& name) {
    for (const auto& i : kOps)
        if (name == i.name) return &i;
    return nullptr;
}

void check_reg(int r, const char* what) {
    if (r < 0 || r >= kNumRegs)
        throw EncodeError(std::string(what) + " register index out of range");
}

void check_imm(std::int64_t v, std::int64_t lo, std::int64_t hi, const char* what) {
    if (v < lo || v > hi)
        throw EncodeError(std::string("immediate ") + std::to_string(v) + " does not fit " + what);
}

std::int32_t sext(std::uint32_t v, int bits) {
    std::uint32_t m = 1u << (bits - 1);
    return static_cast<std::int32_t>((v ^ m) - m);
}

} // namespace

const char* mnemonic(Op op) {
    const OpInfo* i = op_info(op);
    return i ? i->name : "???";
}

std::string register_name(int r) {
    return r == kStackPointer ? "sp" : "r" + std::to_string(r);
}

std::uint32_t encode_instruction(const Instruction& in) {
    const OpInfo* info = op_info(in.op);
    if (!info) throw EncodeError("unknown instruction kind");
    check_reg(in.rd, "rd");
    check_reg(in.rs1, "rs1");
    check_reg(in.rs2, "rs2");

    std::uint32_t w = static_cast<std::uint32_t>(in.op) << 24;
    auto rd = static_cast<std::uint32_t>(in.rd) << 20;
    auto rs1 = static_cast<std::uint32_t>(in.rs1) << 16;
    auto rs2 = static_cast<std::uint32_t>(in.rs2) << 12;
    switch (info->form) {
    case OpInfo::None:
        break;
    case OpInfo::RdImm16:
        check_imm(in.imm, -32768, 32767, "imm16");
        w |= rd | (static_cast<std::uint32_t>(in.imm) & 0xFFFFu);
        break;
    case OpInfo::ThreeReg:
        w |= rd | rs1 | rs2;
        break;
    case OpInfo::RdRs1Imm12:
    case OpInfo::Mem:
        check_imm(in.imm, -2048, 2047, "imm12");
        w |= rd | rs1 | (static_cast<std::uint32_t>(in.imm) & 0xFFFu);
        break;
    case OpInfo::BranchForm:
        check_imm(in.imm, -2048, 2047, "imm12");
        w |= rs1 | rs2 | (static_cast<std::uint32_t>(in.imm) & 0xFFFu);
        break;
    case OpInfo::Imm24:
        check_imm(in.imm, 0, 0xFFFFFF, "imm24");
        if (in.imm % 4 != 0) throw EncodeError("jump target " + std::to_string(in.imm) + " not 4-aligned");
        w |= static_cast<std::uint32_t>(in.imm) & 0xFFFFFFu;
        break;
    case OpInfo::Rs1Only:
        w |= rs1;
        break;
    }
    return w;
}

Instruction decode_instruction(std::uint32_t word, Addr addr) {
    if (addr % 4 != 0) throw DecodeError(addr, word, "instruction address " + to_hex(addr) + " not 4-aligned");
    auto opcode = static_cast<std::uint8_t>(word >> 24);
    const OpInfo* info = nullptr;
    for (const auto& i : kOps)
        if (static_cast<std::uint8_t>(i.op) == opcode) { info = &i; break; }
    if (!info)
        throw DecodeError(addr, word, "unknown opcode " + to_hex(opcode) + " at " + to_hex(addr));

    Instruction in;
    in.op = info->op;
    in.addr = addr;
    int rd = (word >> 20) & 0xF;
    int rs1 = (word >> 16) & 0xF;
    int rs2 = (word >> 12) & 0xF;
    std::uint32_t imm12 = word & 0xFFFu;

    auto reject = [&](bool bad_fields) {
        if (bad_fields)
            throw DecodeError(addr, word, "malformed encoding (nonzero unused field) at " + to_hex(addr));
    };
    switch (info->form) {
    case OpInfo::None:
        reject((word & 0x00FFFFFFu) != 0);
        break;
    case OpInfo::RdImm16:
        reject(rs1 != 0);
        in.rd = rd;
        in.imm = sext(word & 0xFFFFu, 16);
        break;
    case OpInfo::ThreeReg:
        reject(imm12 != 0);
        in.rd = rd;
        in.rs1 = rs1;
        in.rs2 = rs2;
        break;
    case OpInfo::RdRs1Imm12:
    case OpInfo::Mem:
        reject(rs2 != 0);
        in.rd = rd;
        in.rs1 = rs1;
        in.imm = sext(imm12, 12);
        break;
    case OpInfo::BranchForm:
        reject(rd != 0);
        in.rs1 = rs1;
        in.rs2 = rs2;
        in.imm = sext(imm12, 12);
        break;
    case OpInfo::Imm24:
        in.imm = static_cast<std::int32_t>(word & 0xFFFFFFu);
        if (in.imm % 4 != 0)
            throw DecodeError(addr, word, "jump target not 4-aligned at " + to_hex(addr));
        break;
    case OpInfo::Rs1Only:
        reject(rd != 0 || rs2 != 0 || imm12 != 0);
        in.rs1 = rs1;
        break;
    }
    return in;
}

std::string format_instruction(const Instruction& in) {
    const OpInfo* info = op_info(in.op);
    std::ostringstream os;
    os << info->name;
    switch (info->form) {
    case OpInfo::None:
        break;
    case OpInfo::RdImm16:
        os << " " << register_name(in.rd) << "," << in.imm;
        break;
    case OpInfo::ThreeReg:
        os << " " << register_name(in.rd) << "," << register_name(in.rs1) << "," << register_name(in.rs2);
        break;
    case OpInfo::RdRs1Imm12:
        os << " " << register_name(in.rd) << "," << register_name(in.rs1) << "," << in.imm;
        break;
    case OpInfo::Mem:
        os << " " << register_name(in.rd) << ",[" << register_name(in.rs1);
        if (in.imm >= 0) os << "+";
        os << in.imm << "]";
        break;
    case OpInfo::BranchForm:
        os << " " << register_name(in.rs1) << "," << register_name(in.rs2) << "," << in.imm;
        break;
    case OpInfo::Imm24:
        os << " " << to_hex(static_cast<std::uint32_t>(in.imm));
        break;
    case OpInfo::Rs1Only:
        os << " " << register_name(in.rs1);
        break;
    }
    return os.str();
}

std::uint32_t ProgramImage::word_at(Addr a) const {
    if (a < load_address || a + 4 > code_end() || a % 4 != 0)
        throw DecodeError(a, 0, "fetch outside image at " + to_hex(a));
    std::size_t i = a - load_address;
    return static_cast<std::uint32_t>(code[i]) | (static_cast<std::uint32_t>(code[i + 1]) << 8) |
           (static_cast<std::uint32_t>(code[i + 2]) << 16) | (static_cast<std::uint32_t>(code[i + 3]) << 24);
}

void ProgramImage::validate() const {
    if (code.empty()) throw IoError("empty image");
    if (code.size() % 4 != 0) throw IoError("image code length not a multiple of 4");
    if (!contains(entry)) throw IoError("entry point " + to_hex(entry) + " outside image");
    if (entry % 4 != 0) throw IoError("entry point not 4-aligned");
}

// ---------------------------------------------------------------------------
// Assembler

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string upper(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::toupper(c); });
    return s;
}

bool valid_label(const std::string& s) {
    if (s.empty() || (!std::isalpha(static_cast<unsigned char>(s[0])) && s[0] != '_')) return false;
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isalnum(c) || c == '_'; });
}

std::optional<std::int64_t> parse_int(const std::string& tok) {
    std::string t = trim(tok);
    if (t.empty()) return std::nullopt;
    bool neg = false;
    std::size_t i = 0;
    if (t[0] == '-' || t[0] == '+') { neg = t[0] == '-'; i = 1; }
    if (i >= t.size()) return std::nullopt;
    std::int64_t v = 0;
    if (t.compare(i, 2, "0x") == 0 || t.compare(i, 2, "0X") == 0) {
        i += 2;
        if (i >= t.size()) return std::nullopt;
        for (; i < t.size(); i++) {
            char c = static_cast<char>(std::tolower(static_cast<unsigned char>(t[i])));
            int d;
            if (c >= '0' && c <= '9') d = c - '0';
            else if (c >= 'a' && c <= 'f') d = 10 + c - 'a';
            else return std::nullopt;
            v = v * 16 + d;
            if (v > 0x7FFFFFFFFLL) return std::nullopt;
        }
    } else {
        for (; i < t.size(); i++) {
            if (!std::isdigit(static_cast<unsigned char>(t[i]))) return std::nullopt;
            v = v * 10 + (t[i] - '0');
            if (v > 0x7FFFFFFFFLL) return std::nullopt;
        }
    }
    return neg ? -v : v;
}

int parse_register(const std::string& tok, int line) {
    std::string t = upper(trim(tok));
    if (t == "SP") return kStackPointer;
    if (t.size() >= 2 && t[0] == 'R') {
        auto n = parse_int(t.substr(1));
        if (n && *n >= 0 && *n < kNumRegs) return static_cast<int>(*n);
    }
    throw AsmError(line, "bad register '" + trim(tok) + "'");
}

std::vector<std::string> split_operands(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
    return out;
}

struct AsmLine {
    int line;
    std::string mnem;       // upper-cased
    std::vector<std::string> ops;
    Addr addr;
};

} // namespace

ProgramImage assemble(const std::string& source) {
    std::map<std::string, Addr> labels;
    std::vector<AsmLine> lines;
    std::vector<std::pair<Addr, int>> org_pads; // (new location counter, line)
    std::string entry_label;
    std::int64_t entry_value = -1;
    int entry_line = 0;

    // Pass 1: addresses and labels.
    Addr lc = 0;
    std::istringstream in(source);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        lineno++;
        std::string s = raw;
        std::size_t c = s.find_first_of("#;");
        if (c != std::string::npos) s = s.substr(0, c);
        s = trim(s);
        while (!s.empty()) {
            std::size_t colon = s.find(':');
            std::size_t ws = s.find_first_of(" \t");
            if (colon != std::string::npos && (ws == std::string::npos || colon < ws)) {
                std::string lab = trim(s.substr(0, colon));
                if (!valid_label(lab)) throw AsmError(lineno, "bad label '" + lab + "'");
                if (labels.count(lab)) throw AsmError(lineno, "duplicate label '" + lab + "'");
                labels[lab] = lc;
                s = trim(s.substr(colon + 1));
                continue;
            }
            break;
        }
        if (s.empty()) continue;

        if (s[0] == '.') {
            std::istringstream ds(s);
            std::string dir, arg;
            ds >> dir >> arg;
            if (dir == ".entry") {
                if (arg.empty()) throw AsmError(lineno, ".entry needs a label or address");
                auto n = parse_int(arg);
                if (n) entry_value = *n;
                else entry_label = arg;
                entry_line = lineno;
            } else if (dir == ".org") {
                auto n = parse_int(arg);
                if (!n || *n < 0) throw AsmError(lineno, ".org needs a non-negative address");
                if (*n % 4 != 0) throw AsmError(lineno, ".org address not 4-aligned");
                if (static_cast<Addr>(*n) < lc) throw AsmError(lineno, ".org cannot move backwards");
                lc = static_cast<Addr>(*n);
                org_pads.push_back({lc, lineno});
            } else {
                throw AsmError(lineno, "unknown directive '" + dir + "'");
            }
            continue;
        }

        std::size_t ws = s.find_first_of(" \t");
        AsmLine al;
        al.line = lineno;
        al.mnem = upper(ws == std::string::npos ? s : s.substr(0, ws));
        if (ws != std::string::npos) al.ops = split_operands(trim(s.substr(ws)));
        al.addr = lc;
        lines.push_back(al);
        lc += 4;
    }
    if (lines.empty()) throw AsmError(lineno, "no instructions");

    auto resolve = [&](const std::string& tok, int line) -> std::int64_t {
        auto n = parse_int(tok);
        if (n) return *n;
        auto it = labels.find(trim(tok));
        if (it == labels.end()) throw AsmError(line, "undefined label '" + trim(tok) + "'");
        return it->second;
    };

    // Pass 2: encode.
    ProgramImage image;
    image.code.assign(lc, 0);
    for (const auto& al : lines) {
        const OpInfo* info = op_info_by_name(al.mnem);
        if (!info) throw AsmError(al.line, "unknown mnemonic '" + al.mnem + "'");
        Instruction ins;
        ins.op = info->op;
        ins.addr = al.addr;
        auto need = [&](std::size_t n) {
            if (al.ops.size() != n)
                throw AsmError(al.line, al.mnem + " expects " + std::to_string(n) + " operand(s)");
        };
        try {
            switch (info->form) {
            case OpInfo::None:
                need(0);
                break;
            case OpInfo::RdImm16: {
                need(2);
                ins.rd = parse_register(al.ops[0], al.line);
                // Accepts a label so address constants can be materialized.
                std::int64_t v = resolve(al.ops[1], al.line);
                if (v < -32768 || v > 32767) throw AsmError(al.line, "immediate exceeds imm16");
                ins.imm = static_cast<std::int32_t>(v);
                break;
            }
            case OpInfo::ThreeReg:
                need(3);
                ins.rd = parse_register(al.ops[0], al.line);
                ins.rs1 = parse_register(al.ops[1], al.line);
                ins.rs2 = parse_register(al.ops[2], al.line);
                break;
            case OpInfo::RdRs1Imm12: {
                need(3);
                ins.rd = parse_register(al.ops[0], al.line);
                ins.rs1 = parse_register(al.ops[1], al.line);
                auto v = parse_int(al.ops[2]);
                if (!v) throw AsmError(al.line, "bad immediate '" + al.ops[2] + "'");
                if (*v < -2048 || *v > 2047) throw AsmError(al.line, "immediate exceeds imm12");
                ins.imm = static_cast<std::int32_t>(*v);
                break;
            }
            case OpInfo::Mem: {
                need(2);
                ins.rd = parse_register(al.ops[0], al.line);
                std::string m = trim(al.ops[1]);
                if (m.size() < 2 || m.front() != '[' || m.back() != ']')
                    throw AsmError(al.line, "expected [reg+offset] operand");
                m = trim(m.substr(1, m.size() - 2));
                std::size_t p = m.find_first_of("+-", 1);
                std::string base = p == std::string::npos ? m : m.substr(0, p);
                ins.rs1 = parse_register(base, al.line);
                std::int64_t off = 0;
                if (p != std::string::npos) {
                    auto v = parse_int(m.substr(p));
                    if (!v) throw AsmError(al.line, "bad offset in '" + al.ops[1] + "'");
                    off = *v;
                }
                if (off < -2048 || off > 2047) throw AsmError(al.line, "offset exceeds imm12");
                ins.imm = static_cast<std::int32_t>(off);
                break;
            }
            case OpInfo::BranchForm: {
                need(3);
                ins.rs1 = parse_register(al.ops[0], al.line);
                ins.rs2 = parse_register(al.ops[1], al.line);
                auto n = parse_int(al.ops[2]);
                std::int64_t off;
                if (n) {
                    off = *n; // raw offset in instruction units
                } else {
                    std::int64_t target = resolve(al.ops[2], al.line);
                    off = (target - (static_cast<std::int64_t>(al.addr) + 4)) / 4;
                    if (target % 4 != 0) throw AsmError(al.line, "branch target not 4-aligned");
                }
                if (off < -2048 || off > 2047) throw AsmError(al.line, "branch offset exceeds imm12");
                ins.imm = static_cast<std::int32_t>(off);
                break;
            }
            case OpInfo::Imm24: {
                need(1);
                std::int64_t target = resolve(al.ops[0], al.line);
                if (target < 0 || target > 0xFFFFFF) throw AsmError(al.line, "target exceeds imm24");
                if (target % 4 != 0) throw AsmError(al.line, "target not 4-aligned");
                ins.imm = static_cast<std::int32_t>(target);
                break;
            }
            case OpInfo::Rs1Only:
                need(1);
                ins.rs1 = parse_register(al.ops[0], al.line);
                break;
            }
            std::uint32_t w = encode_instruction(ins);
            std::size_t i = ins.addr;
            image.code[i] = static_cast<std::uint8_t>(w & 0xFF);
            image.code[i + 1] = static_cast<std::uint8_t>((w >> 8) & 0xFF);
            image.code[i + 2] = static_cast<std::uint8_t>((w >> 16) & 0xFF);
            image.code[i + 3] = static_cast<std::uint8_t>((w >> 24) & 0xFF);
        } catch (const EncodeError& e) {
            throw AsmError(al.line, e.what());
        }
    }

    if (!entry_label.empty()) {
        auto it = labels.find(entry_label);
        if (it == labels.end()) throw AsmError(entry_line, "undefined label '" + entry_label + "'");
        image.entry = it->second;
    } else if (entry_value >= 0) {
        image.entry = static_cast<Addr>(entry_value);
    }
    image.validate();
    return image;
}

// ---------------------------------------------------------------------------
// Binary container

namespace {
void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xFF));
}
std::uint32_t get_u32(const std::vector<std::uint8_t>& in, std::size_t i) {
    return static_cast<std::uint32_t>(in[i]) | (static_cast<std::uint32_t>(in[i + 1]) << 8) |
           (static_cast<std::uint32_t>(in[i + 2]) << 16) | (static_cast<std::uint32_t>(in[i + 3]) << 24);
}
} // namespace

std::vector<std::uint8_t> image_to_bytes(const ProgramImage& image) {
    std::vector<std::uint8_t> out{'T', 'W', 'C', 'A'};
    put_u32(out, image.entry);
    put_u32(out, static_cast<std::uint32_t>(image.code.size()));
    out.insert(out.end(), image.code.begin(), image.code.end());
    return out;
}

ProgramImage image_from_bytes(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 12 || bytes[0] != 'T' || bytes[1] != 'W' || bytes[2] != 'C' || bytes[3] != 'A')
        throw IoError("not a TWCA image");
    ProgramImage image;
    image.entry = get_u32(bytes, 4);
    std::uint32_t len = get_u32(bytes, 8);
    if (bytes.size() != 12 + static_cast<std::size_t>(len))
        throw IoError("image length field disagrees with file size");
    image.code.assign(bytes.begin() + 12, bytes.end());
    image.validate();
    return image;
}

void write_image(const std::string& path, const ProgramImage& image) {
    auto bytes = image_to_bytes(image);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

ProgramImage read_image(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot read " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return image_from_bytes(bytes);
}

} // namespace timebound

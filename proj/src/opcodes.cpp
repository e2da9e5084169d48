// eth2vec: EVM bytecode embeddings for clone and vulnerability detection
// SPDX-License-Identifier: Apache-2.0

#include <eth2vec/opcodes.hpp>

#include <array>
#include <cstdio>
#include <unordered_map>

namespace eth2vec
{
namespace
{
using NameTable = std::array<const char*, 256>;

NameTable make_names()
{
    NameTable t{};
    t[0x00] = "STOP";
    t[0x01] = "ADD";
    t[0x02] = "MUL";
    t[0x03] = "SUB";
    t[0x04] = "DIV";
    t[0x05] = "SDIV";
    t[0x06] = "MOD";
    t[0x07] = "SMOD";
    t[0x08] = "ADDMOD";
    t[0x09] = "MULMOD";
    t[0x0a] = "EXP";
    t[0x0b] = "SIGNEXTEND";
    t[0x10] = "LT";
    t[0x11] = "GT";
    t[0x12] = "SLT";
    t[0x13] = "SGT";
    t[0x14] = "EQ";
    t[0x15] = "ISZERO";
    t[0x16] = "AND";
    t[0x17] = "OR";
    t[0x18] = "XOR";
    t[0x19] = "NOT";
    t[0x1a] = "BYTE";
    t[0x1b] = "SHL";
    t[0x1c] = "SHR";
    t[0x1d] = "SAR";
    t[0x20] = "KECCAK256";
    t[0x30] = "ADDRESS";
    t[0x31] = "BALANCE";
    t[0x32] = "ORIGIN";
    t[0x33] = "CALLER";
    t[0x34] = "CALLVALUE";
    t[0x35] = "CALLDATALOAD";
    t[0x36] = "CALLDATASIZE";
    t[0x37] = "CALLDATACOPY";
    t[0x38] = "CODESIZE";
    t[0x39] = "CODECOPY";
    t[0x3a] = "GASPRICE";
    t[0x3b] = "EXTCODESIZE";
    t[0x3c] = "EXTCODECOPY";
    t[0x3d] = "RETURNDATASIZE";
    t[0x3e] = "RETURNDATACOPY";
    t[0x3f] = "EXTCODEHASH";
    t[0x40] = "BLOCKHASH";
    t[0x41] = "COINBASE";
    t[0x42] = "TIMESTAMP";
    t[0x43] = "NUMBER";
    t[0x44] = "PREVRANDAO";
    t[0x45] = "GASLIMIT";
    t[0x46] = "CHAINID";
    t[0x47] = "SELFBALANCE";
    t[0x48] = "BASEFEE";
    t[0x50] = "POP";
    t[0x51] = "MLOAD";
    t[0x52] = "MSTORE";
    t[0x53] = "MSTORE8";
    t[0x54] = "SLOAD";
    t[0x55] = "SSTORE";
    t[0x56] = "JUMP";
    t[0x57] = "JUMPI";
    t[0x58] = "PC";
    t[0x59] = "MSIZE";
    t[0x5a] = "GAS";
    t[0x5b] = "JUMPDEST";
    t[0x5f] = "PUSH0";

    static constexpr const char* push[] = {"PUSH1", "PUSH2", "PUSH3", "PUSH4", "PUSH5",
        "PUSH6", "PUSH7", "PUSH8", "PUSH9", "PUSH10", "PUSH11", "PUSH12", "PUSH13", "PUSH14",
        "PUSH15", "PUSH16", "PUSH17", "PUSH18", "PUSH19", "PUSH20", "PUSH21", "PUSH22",
        "PUSH23", "PUSH24", "PUSH25", "PUSH26", "PUSH27", "PUSH28", "PUSH29", "PUSH30",
        "PUSH31", "PUSH32"};
    static constexpr const char* dup[] = {"DUP1", "DUP2", "DUP3", "DUP4", "DUP5", "DUP6",
        "DUP7", "DUP8", "DUP9", "DUP10", "DUP11", "DUP12", "DUP13", "DUP14", "DUP15", "DUP16"};
    static constexpr const char* swap[] = {"SWAP1", "SWAP2", "SWAP3", "SWAP4", "SWAP5",
        "SWAP6", "SWAP7", "SWAP8", "SWAP9", "SWAP10", "SWAP11", "SWAP12", "SWAP13", "SWAP14",
        "SWAP15", "SWAP16"};
    for (int i = 0; i < 32; ++i)
        t[0x60 + i] = push[i];
    for (int i = 0; i < 16; ++i)
    {
        t[0x80 + i] = dup[i];
        t[0x90 + i] = swap[i];
    }

    t[0xa0] = "LOG0";
    t[0xa1] = "LOG1";
    t[0xa2] = "LOG2";
    t[0xa3] = "LOG3";
    t[0xa4] = "LOG4";
    t[0xf0] = "CREATE";
    t[0xf1] = "CALL";
    t[0xf2] = "CALLCODE";
    t[0xf3] = "RETURN";
    t[0xf4] = "DELEGATECALL";
    t[0xf5] = "CREATE2";
    t[0xfa] = "STATICCALL";
    t[0xfd] = "REVERT";
    t[0xfe] = "INVALID";
    t[0xff] = "SELFDESTRUCT";
    return t;
}

const NameTable& names()
{
    static const NameTable table = make_names();
    return table;
}

const std::unordered_map<std::string_view, uint8_t>& reverse_names()
{
    static const auto table = [] {
        std::unordered_map<std::string_view, uint8_t> m;
        for (int op = 0; op < 256; ++op)
        {
            if (const char* n = names()[static_cast<size_t>(op)])
                m.emplace(n, static_cast<uint8_t>(op));
        }
        return m;
    }();
    return table;
}
}  // namespace

bool is_defined(uint8_t opcode) noexcept
{
    return names()[opcode] != nullptr;
}

std::string mnemonic(uint8_t opcode)
{
    if (const char* n = names()[opcode])
        return n;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "INVALID(0x%02x)", opcode);
    return buf;
}

std::optional<uint8_t> opcode_from_mnemonic(std::string_view name)
{
    const auto& rev = reverse_names();
    if (const auto it = rev.find(name); it != rev.end())
        return it->second;

    // INVALID(0xXX), only for bytes that are actually undefined
    constexpr std::string_view prefix = "INVALID(0x";
    if (name.size() == prefix.size() + 3 && name.substr(0, prefix.size()) == prefix &&
        name.back() == ')')
    {
        unsigned value = 0;
        for (const char c : name.substr(prefix.size(), 2))
        {
            value <<= 4;
            if (c >= '0' && c <= '9')
                value |= static_cast<unsigned>(c - '0');
            else if (c >= 'a' && c <= 'f')
                value |= static_cast<unsigned>(c - 'a' + 10);
            else
                return std::nullopt;
        }
        if (!is_defined(static_cast<uint8_t>(value)))
            return static_cast<uint8_t>(value);
    }
    return std::nullopt;
}

bool is_terminator(uint8_t opcode) noexcept
{
    switch (opcode)
    {
    case OP_STOP:
    case OP_JUMP:
    case OP_RETURN:
    case OP_REVERT:
    case OP_INVALID:
    case OP_SELFDESTRUCT:
        return true;
    default:
        return !is_defined(opcode);
    }
}

bool ends_block(uint8_t opcode) noexcept
{
    return opcode == OP_JUMPI || is_terminator(opcode);
}
}  // namespace eth2vec

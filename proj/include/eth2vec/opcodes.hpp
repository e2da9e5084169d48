// eth2vec: EVM bytecode embeddings for clone and vulnerability detection
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace eth2vec
{
/// Opcode table revision the disassembler is frozen to.
inline constexpr std::string_view evm_revision = "shanghai";

enum Opcode : uint8_t
{
    OP_STOP = 0x00,
    OP_ADD = 0x01,
    OP_MUL = 0x02,
    OP_SUB = 0x03,
    OP_DIV = 0x04,
    OP_EXP = 0x0a,
    OP_LT = 0x10,
    OP_GT = 0x11,
    OP_EQ = 0x14,
    OP_ISZERO = 0x15,
    OP_AND = 0x16,
    OP_SHR = 0x1c,
    OP_KECCAK256 = 0x20,
    OP_CALLER = 0x33,
    OP_CALLVALUE = 0x34,
    OP_CALLDATALOAD = 0x35,
    OP_CALLDATASIZE = 0x36,
    OP_TIMESTAMP = 0x42,
    OP_NUMBER = 0x43,
    OP_POP = 0x50,
    OP_MLOAD = 0x51,
    OP_MSTORE = 0x52,
    OP_SLOAD = 0x54,
    OP_SSTORE = 0x55,
    OP_JUMP = 0x56,
    OP_JUMPI = 0x57,
    OP_GAS = 0x5a,
    OP_JUMPDEST = 0x5b,
    OP_PUSH0 = 0x5f,
    OP_PUSH1 = 0x60,
    OP_PUSH2 = 0x61,
    OP_PUSH4 = 0x63,
    OP_PUSH20 = 0x73,
    OP_PUSH32 = 0x7f,
    OP_DUP1 = 0x80,
    OP_DUP2 = 0x81,
    OP_SWAP1 = 0x90,
    OP_LOG1 = 0xa1,
    OP_CALL = 0xf1,
    OP_RETURN = 0xf3,
    OP_DELEGATECALL = 0xf4,
    OP_STATICCALL = 0xfa,
    OP_REVERT = 0xfd,
    OP_INVALID = 0xfe,
    OP_SELFDESTRUCT = 0xff,
};

/// True if the byte is assigned in the frozen table. 0xfe (the designated
/// INVALID instruction) counts as defined.
bool is_defined(uint8_t opcode) noexcept;

/// Canonical mnemonic; undefined bytes yield "INVALID(0xXX)".
std::string mnemonic(uint8_t opcode);

/// Reverse lookup, accepting the "INVALID(0xXX)" spelling for undefined bytes.
std::optional<uint8_t> opcode_from_mnemonic(std::string_view name);

/// Number of immediate bytes following the opcode (N for PUSHN, else 0).
constexpr size_t immediate_size(uint8_t opcode) noexcept
{
    return (opcode >= OP_PUSH1 && opcode <= OP_PUSH32) ? size_t{opcode} - (OP_PUSH1 - 1) : 0;
}

constexpr bool is_push(uint8_t opcode) noexcept
{
    return opcode >= OP_PUSH0 && opcode <= OP_PUSH32;
}

/// Instructions after which control never falls through to the next byte.
bool is_terminator(uint8_t opcode) noexcept;

/// Instructions that end a basic block: JUMP, JUMPI and the terminators.
bool ends_block(uint8_t opcode) noexcept;
}  // namespace eth2vec

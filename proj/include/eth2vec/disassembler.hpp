// eth2vec: EVM bytecode embeddings for clone and vulnerability detection
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <eth2vec/bytes.hpp>

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace eth2vec
{
/// One decoded EVM operation.
struct Instruction
{
    size_t offset = 0;
    uint8_t opcode = 0;
    std::string mnemonic;
    /// Immediate bytes; exactly N bytes for PUSHN (zero-padded past end of code).
    bytes operand;

    size_t size() const noexcept { return 1 + operand.size(); }

    bool operator==(const Instruction&) const = default;
};

/// Maximal straight-line run of instructions.
struct BasicBlock
{
    uint32_t id = 0;
    std::string name;
    size_t start_offset = 0;  ///< sea
    size_t end_offset = 0;    ///< eea: start of the next block (exclusive end)
    std::vector<Instruction> instructions;
    bytes code;                     ///< raw bytes in [start_offset, end_offset)
    std::vector<uint32_t> callees;  ///< static jump target first, then fall-through

    bool operator==(const BasicBlock&) const = default;
};

struct FunctionUnit
{
    uint32_t id = 0;
    std::string name;
    size_t start_offset = 0;  ///< sea
    size_t end_offset = 0;    ///< see
    std::vector<BasicBlock> blocks;
    std::vector<uint32_t> callees;

    bool operator==(const FunctionUnit&) const = default;
};

inline constexpr size_t unknown_code_size = std::numeric_limits<size_t>::max();

/// Linear sweep over the whole byte string. Never fails: truncated PUSH data is
/// zero-padded and unassigned bytes decode as INVALID(0xXX).
std::vector<Instruction> disassemble(bytes_view code);

/// Partitions an instruction stream into basic blocks.
///
/// A block starts at offset 0, at every JUMPDEST, and after every JUMP, JUMPI,
/// STOP, RETURN, REVERT, SELFDESTRUCT or INVALID. Callee edges are the static
/// target of a `PUSH <const>; JUMP[I]` pair landing on a JUMPDEST, plus the
/// fall-through successor of any block not ending in a terminator.
///
/// `code_size` clips the last block's byte range when the final PUSH was
/// truncated; by default the instruction extents are taken as-is.
std::vector<BasicBlock> split_blocks(
    std::span<const Instruction> instructions, size_t code_size = unknown_code_size);

/// Groups blocks into functions using the selector-dispatcher idiom
/// `[DUP1] PUSH4 <sel> EQ PUSH <target> JUMPI`.
///
/// Each selector claims the blocks reachable from its dispatch target that no
/// earlier selector claimed. Remaining blocks reachable from offset 0 form
/// "dispatch"; everything else forms "orphan". Without any dispatcher idiom
/// all blocks become one function named "main". Functions are ordered
/// dispatch, selectors in discovery order, orphan; empty ones are dropped.
std::vector<FunctionUnit> identify_functions(std::vector<BasicBlock> blocks);

/// disassemble + split_blocks + identify_functions.
std::vector<FunctionUnit> extract_functions(bytes_view code);
}  // namespace eth2vec

// eth2vec: EVM bytecode embeddings for clone and vulnerability detection
// SPDX-License-Identifier: Apache-2.0

#include <eth2vec/disassembler.hpp>
#include <eth2vec/opcodes.hpp>

#include <algorithm>
#include <cstdio>
#include <deque>
#include <optional>

namespace eth2vec
{
namespace
{
std::string block_name(size_t offset)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "loc_%zx", offset);
    return buf;
}

/// Big-endian value of a PUSH operand if it fits a code offset.
std::optional<size_t> push_value(const Instruction& in)
{
    if (!is_push(in.opcode))
        return std::nullopt;
    size_t value = 0;
    for (size_t i = 0; i < in.operand.size(); ++i)
    {
        const auto b = in.operand[i];
        if (in.operand.size() - i > sizeof(size_t) && b != 0)
            return std::nullopt;
        value = (value << 8) | b;
    }
    return value;
}

/// Block id starting at `offset` with a JUMPDEST, if any.
std::optional<uint32_t> jumpdest_block(std::span<const BasicBlock> blocks, size_t offset)
{
    const auto it = std::lower_bound(blocks.begin(), blocks.end(), offset,
        [](const BasicBlock& b, size_t off) { return b.start_offset < off; });
    if (it == blocks.end() || it->start_offset != offset)
        return std::nullopt;
    if (it->instructions.front().opcode != OP_JUMPDEST)
        return std::nullopt;
    return it->id;
}

/// Resolves the `PUSH <const>; JUMP[I]` pattern at the end of a block.
std::optional<uint32_t> static_jump_target(
    const BasicBlock& block, std::span<const BasicBlock> blocks)
{
    const auto& ins = block.instructions;
    const auto last = ins.back().opcode;
    if ((last != OP_JUMP && last != OP_JUMPI) || ins.size() < 2)
        return std::nullopt;
    const auto dest = push_value(ins[ins.size() - 2]);
    if (!dest)
        return std::nullopt;
    return jumpdest_block(blocks, *dest);
}

/// Matches `[DUP1] PUSH4 <sel> EQ PUSH <target> JUMPI` at the block tail and
/// returns the selector operand.
std::optional<bytes> dispatcher_selector(const BasicBlock& block)
{
    const auto& ins = block.instructions;
    const auto n = ins.size();
    if (n < 4)
        return std::nullopt;
    if (ins[n - 1].opcode != OP_JUMPI)
        return std::nullopt;
    if (immediate_size(ins[n - 2].opcode) == 0)
        return std::nullopt;
    if (ins[n - 3].opcode != OP_EQ)
        return std::nullopt;
    if (ins[n - 4].opcode != OP_PUSH4)
        return std::nullopt;
    return ins[n - 4].operand;
}

std::vector<uint32_t> reachable_from(uint32_t root, std::span<const BasicBlock> blocks)
{
    std::vector<bool> seen(blocks.size(), false);
    std::vector<uint32_t> order;
    std::deque<uint32_t> queue{root};
    seen[root] = true;
    while (!queue.empty())
    {
        const auto id = queue.front();
        queue.pop_front();
        order.push_back(id);
        for (const auto c : blocks[id].callees)
        {
            if (!seen[c])
            {
                seen[c] = true;
                queue.push_back(c);
            }
        }
    }
    return order;
}

struct Selector
{
    std::string name;
    uint32_t target;
};

/// Breadth-first walk of the entry region, stopping at dispatch targets.
std::vector<Selector> scan_dispatcher(std::span<const BasicBlock> blocks)
{
    std::vector<Selector> selectors;
    std::vector<bool> seen(blocks.size(), false);
    std::vector<bool> is_target(blocks.size(), false);
    std::deque<uint32_t> queue{0};
    seen[0] = true;
    while (!queue.empty())
    {
        const auto id = queue.front();
        queue.pop_front();
        const auto& block = blocks[id];

        if (const auto sel = dispatcher_selector(block))
        {
            if (const auto target = static_jump_target(block, blocks))
            {
                selectors.push_back({to_hex_prefixed(*sel), *target});
                is_target[*target] = true;
            }
        }
        for (const auto c : block.callees)
        {
            if (!seen[c] && !is_target[c])
            {
                seen[c] = true;
                queue.push_back(c);
            }
        }
    }
    return selectors;
}

FunctionUnit make_function(std::string name, std::vector<BasicBlock> blocks)
{
    std::sort(blocks.begin(), blocks.end(),
        [](const BasicBlock& a, const BasicBlock& b) { return a.start_offset < b.start_offset; });
    FunctionUnit f;
    f.name = std::move(name);
    f.start_offset = blocks.front().start_offset;
    f.end_offset = 0;
    for (const auto& b : blocks)
        f.end_offset = std::max(f.end_offset, b.end_offset);
    f.blocks = std::move(blocks);
    return f;
}
}  // namespace

std::vector<Instruction> disassemble(bytes_view code)
{
    std::vector<Instruction> out;
    size_t pc = 0;
    while (pc < code.size())
    {
        Instruction in;
        in.offset = pc;
        in.opcode = code[pc];
        in.mnemonic = mnemonic(in.opcode);
        const auto n = immediate_size(in.opcode);
        in.operand.assign(n, 0);
        for (size_t i = 0; i < n && pc + 1 + i < code.size(); ++i)
            in.operand[i] = code[pc + 1 + i];
        pc += 1 + n;
        out.push_back(std::move(in));
    }
    return out;
}

std::vector<BasicBlock> split_blocks(std::span<const Instruction> instructions, size_t code_size)
{
    std::vector<BasicBlock> blocks;
    for (size_t i = 0; i < instructions.size(); ++i)
    {
        const auto& in = instructions[i];
        const bool starts =
            blocks.empty() || in.opcode == OP_JUMPDEST ||
            ends_block(instructions[i - 1].opcode);
        if (starts)
        {
            BasicBlock b;
            b.id = static_cast<uint32_t>(blocks.size());
            b.name = block_name(in.offset);
            b.start_offset = in.offset;
            blocks.push_back(std::move(b));
        }
        blocks.back().instructions.push_back(in);
    }

    for (size_t i = 0; i < blocks.size(); ++i)
    {
        auto& b = blocks[i];
        const auto& last = b.instructions.back();
        b.end_offset = i + 1 < blocks.size() ? blocks[i + 1].start_offset
                                             : std::min(last.offset + last.size(), code_size);
        for (const auto& in : b.instructions)
        {
            b.code.push_back(in.opcode);
            b.code.insert(b.code.end(), in.operand.begin(), in.operand.end());
        }
        b.code.resize(b.end_offset - b.start_offset);
    }

    for (size_t i = 0; i < blocks.size(); ++i)
    {
        auto& b = blocks[i];
        if (const auto t = static_jump_target(b, blocks))
            b.callees.push_back(*t);
        const bool falls_through = !is_terminator(b.instructions.back().opcode);
        if (falls_through && i + 1 < blocks.size())
        {
            const auto next = static_cast<uint32_t>(i + 1);
            if (std::find(b.callees.begin(), b.callees.end(), next) == b.callees.end())
                b.callees.push_back(next);
        }
    }
    return blocks;
}

std::vector<FunctionUnit> identify_functions(std::vector<BasicBlock> blocks)
{
    if (blocks.empty())
        return {};

    const auto selectors = scan_dispatcher(blocks);
    if (selectors.empty())
    {
        std::vector<FunctionUnit> out;
        out.push_back(make_function("main", std::move(blocks)));
        return out;
    }

    // owner slot: 0 = dispatch, 1..n = selectors, n+1 = orphan
    constexpr int unclaimed = -1;
    const int orphan_slot = static_cast<int>(selectors.size()) + 1;
    std::vector<int> owner(blocks.size(), unclaimed);
    for (size_t s = 0; s < selectors.size(); ++s)
    {
        for (const auto id : reachable_from(selectors[s].target, blocks))
        {
            if (owner[id] == unclaimed)
                owner[id] = static_cast<int>(s) + 1;
        }
    }
    for (const auto id : reachable_from(0, blocks))
    {
        if (owner[id] == unclaimed)
            owner[id] = 0;
    }
    for (auto& o : owner)
    {
        if (o == unclaimed)
            o = orphan_slot;
    }

    std::vector<std::vector<BasicBlock>> grouped(selectors.size() + 2);
    for (auto& b : blocks)
        grouped[static_cast<size_t>(owner[b.id])].push_back(std::move(b));

    std::vector<FunctionUnit> functions;
    std::vector<int> slot_to_function(grouped.size(), -1);
    for (size_t slot = 0; slot < grouped.size(); ++slot)
    {
        if (grouped[slot].empty())
            continue;
        std::string name = slot == 0                       ? "dispatch"
                           : slot == grouped.size() - 1 ? "orphan"
                                                        : selectors[slot - 1].name;
        slot_to_function[slot] = static_cast<int>(functions.size());
        functions.push_back(make_function(std::move(name), std::move(grouped[slot])));
        functions.back().id = static_cast<uint32_t>(functions.size() - 1);
    }

    for (auto& f : functions)
    {
        for (const auto& b : f.blocks)
        {
            for (const auto c : b.callees)
            {
                const auto callee =
                    static_cast<uint32_t>(slot_to_function[static_cast<size_t>(owner[c])]);
                if (callee != f.id)
                    f.callees.push_back(callee);
            }
        }
        std::sort(f.callees.begin(), f.callees.end());
        f.callees.erase(std::unique(f.callees.begin(), f.callees.end()), f.callees.end());
    }
    return functions;
}

std::vector<FunctionUnit> extract_functions(bytes_view code)
{
    const auto instructions = disassemble(code);
    return identify_functions(split_blocks(instructions, code.size()));
}
}  // namespace eth2vec

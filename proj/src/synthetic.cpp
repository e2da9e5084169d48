// eth2vec: EVM bytecode embeddings for clone and vulnerability detection
// SPDX-License-Identifier: Apache-2.0

#include <eth2vec/corpus.hpp>
#include <eth2vec/opcodes.hpp>
#include <eth2vec/synthetic.hpp>

#include <algorithm>
#include <cstdio>
#include <map>

namespace eth2vec::synthetic
{
namespace
{
enum Kind : uint8_t
{
    StorageIncrement,
    CheckedDecrement,
    UncheckedSub,
    UncheckedMul,
    UncheckedAdd,
    OwnerGuard,
    MappingLoad,
    MappingStore,
    ExternalCallValue,
    CheckedSend,
    TimestampGuard,
    TimestampRandom,
    BlockNumberStore,
    Erc20Transfer,
    StorageLoop,
    EmitEvent,
    FlagGuard,
    ArgumentLoad,
    BalanceStore,
    DelegateForward,
    MemoryCopy,
    PowerDivide,
    ShiftMask,
    ExtcodeGuard,
    StorageSwap,
    ConstantCompare,
    KindCount,
};

/// Idioms characteristic of each vulnerability.
const std::map<Tag, std::vector<uint8_t>>& tag_idioms()
{
    static const std::map<Tag, std::vector<uint8_t>> m = {
        {Tag::Reentrancy, {ExternalCallValue}},
        {Tag::TimeDependency, {TimestampGuard, TimestampRandom}},
        {Tag::ERC20Transfer, {Erc20Transfer}},
        {Tag::GasConsumption, {StorageLoop}},
        {Tag::ImplicitVisibility, {DelegateForward, StorageSwap}},
        {Tag::IntegerOverflow, {UncheckedAdd, UncheckedMul}},
        {Tag::IntegerUnderflow, {UncheckedSub}},
    };
    return m;
}

/// Assembly with symbolic labels, resolved in two passes.
class Assembler
{
public:
    int new_label() { return next_label_++; }

    void op(uint8_t opcode) { items_.push_back({Item::Op, opcode, {}, 0}); }

    void push(uint64_t value, size_t width)
    {
        bytes data(width, 0);
        for (size_t i = 0; i < width && i < 8; ++i)
            data[width - 1 - i] = static_cast<uint8_t>(value >> (8 * i));
        items_.push_back({Item::Push, static_cast<uint8_t>(OP_PUSH1 + width - 1), std::move(data), 0});
    }

    void push_bytes(bytes data)
    {
        const auto op = static_cast<uint8_t>(OP_PUSH1 + data.size() - 1);
        items_.push_back({Item::Push, op, std::move(data), 0});
    }

    void push1(uint8_t v) { push(v, 1); }
    void push_label(int label) { items_.push_back({Item::PushLabel, OP_PUSH2, {}, label}); }
    void label(int label) { items_.push_back({Item::Label, OP_JUMPDEST, {}, label}); }

    void ops(std::initializer_list<uint8_t> list)
    {
        for (const auto o : list)
            op(o);
    }

    bytes finish() const
    {
        std::map<int, size_t> address;
        size_t pc = 0;
        for (const auto& it : items_)
        {
            if (it.type == Item::Label)
                address[it.label] = pc;
            pc += size(it);
        }
        bytes out;
        out.reserve(pc);
        for (const auto& it : items_)
        {
            out.push_back(it.opcode);
            if (it.type == Item::Push)
                out.insert(out.end(), it.data.begin(), it.data.end());
            else if (it.type == Item::PushLabel)
            {
                const auto a = address.at(it.label);
                out.push_back(static_cast<uint8_t>(a >> 8));
                out.push_back(static_cast<uint8_t>(a));
            }
        }
        return out;
    }

private:
    struct Item
    {
        enum Type
        {
            Op,
            Push,
            Label,
            PushLabel
        } type;
        uint8_t opcode;
        bytes data;
        int label;
    };

    static size_t size(const Item& it)
    {
        switch (it.type)
        {
        case Item::Push:
            return 1 + it.data.size();
        case Item::PushLabel:
            return 3;
        default:
            return 1;
        }
    }

    std::vector<Item> items_;
    int next_label_ = 0;
};

bytes pseudo_random_bytes(uint64_t seed, size_t n)
{
    Rng rng{seed};
    bytes out(n);
    for (auto& b : out)
        b = static_cast<uint8_t>(rng.next());
    return out;
}

void revert_unless(Assembler& a)
{
    const int ok = a.new_label();
    a.push_label(ok);
    a.op(OP_JUMPI);
    a.push1(0);
    a.op(OP_DUP1);
    a.op(OP_REVERT);
    a.label(ok);
}

void emit_statement(Assembler& a, const Statement& s)
{
    const uint8_t slot = s.slot;
    const uint8_t v = s.value;
    switch (s.kind)
    {
    case StorageIncrement:
        a.push1(slot);
        a.op(OP_SLOAD);
        a.push1(v);
        a.op(OP_ADD);
        a.push1(slot);
        a.op(OP_SSTORE);
        break;
    case CheckedDecrement:
        a.push1(slot);
        a.op(OP_SLOAD);
        a.op(OP_DUP1);
        a.push1(v);
        a.op(OP_GT);
        a.op(OP_ISZERO);
        revert_unless(a);
        a.push1(v);
        a.op(OP_SWAP1);
        a.op(OP_SUB);
        a.push1(slot);
        a.op(OP_SSTORE);
        break;
    case UncheckedSub:
        a.push1(0x04);
        a.op(OP_CALLDATALOAD);
        a.push1(slot);
        a.op(OP_SLOAD);
        a.op(OP_SUB);
        a.push1(slot);
        a.op(OP_SSTORE);
        break;
    case UncheckedMul:
        a.push1(0x24);
        a.op(OP_CALLDATALOAD);
        a.push1(slot);
        a.op(OP_SLOAD);
        a.op(OP_MUL);
        a.push1(slot);
        a.op(OP_SSTORE);
        break;
    case UncheckedAdd:
        a.push1(0x04);
        a.op(OP_CALLDATALOAD);
        a.push1(slot);
        a.op(OP_SLOAD);
        a.op(OP_ADD);
        a.push1(slot);
        a.op(OP_SSTORE);
        break;
    case OwnerGuard:
        a.push1(slot);
        a.op(OP_SLOAD);
        a.push_bytes(bytes(20, 0xff));
        a.op(OP_AND);
        a.op(OP_CALLER);
        a.op(OP_EQ);
        revert_unless(a);
        break;
    case MappingLoad:
        a.op(OP_CALLER);
        a.push1(0);
        a.op(OP_MSTORE);
        a.push1(slot);
        a.push1(0x20);
        a.op(OP_MSTORE);
        a.push1(0x40);
        a.push1(0);
        a.op(OP_KECCAK256);
        a.op(OP_SLOAD);
        a.op(OP_POP);
        break;
    case MappingStore:
        a.push1(0x04);
        a.op(OP_CALLDATALOAD);
        a.push1(0);
        a.op(OP_MSTORE);
        a.push1(slot);
        a.push1(0x20);
        a.op(OP_MSTORE);
        a.push1(v);
        a.push1(0x40);
        a.push1(0);
        a.op(OP_KECCAK256);
        a.op(OP_SSTORE);
        break;
    case ExternalCallValue:
        a.push1(0);
        a.op(OP_DUP1);
        a.push1(0);
        a.op(OP_DUP1);
        a.push1(slot);
        a.op(OP_SLOAD);
        a.op(OP_CALLER);
        a.op(OP_GAS);
        a.op(OP_CALL);
        a.op(OP_POP);
        break;
    case CheckedSend:
        a.push1(0);
        a.op(OP_DUP1);
        a.push1(0);
        a.op(OP_DUP1);
        a.push1(v);
        a.op(OP_CALLER);
        a.push(0x08fc, 2);
        a.op(OP_CALL);
        revert_unless(a);
        break;
    case TimestampGuard:
        a.push1(slot);
        a.op(OP_SLOAD);
        a.op(OP_TIMESTAMP);
        a.op(OP_LT);
        revert_unless(a);
        break;
    case TimestampRandom:
        a.push1(v);
        a.op(OP_TIMESTAMP);
        a.op(0x06);  // MOD
        a.push1(slot);
        a.op(OP_SSTORE);
        break;
    case BlockNumberStore:
        a.op(OP_NUMBER);
        a.push1(slot);
        a.op(OP_SSTORE);
        break;
    case Erc20Transfer:
        a.push1(0x40);
        a.op(OP_MLOAD);
        a.push(0xa9059cbb, 4);
        a.push1(0xe0);
        a.op(0x1b);  // SHL
        a.op(OP_DUP2);
        a.op(OP_MSTORE);
        a.op(OP_CALLER);
        a.push1(0x04);
        a.op(0x82);  // DUP3
        a.op(OP_ADD);
        a.op(OP_MSTORE);
        a.push1(v);
        a.push1(0x24);
        a.op(0x82);
        a.op(OP_ADD);
        a.op(OP_MSTORE);
        a.push1(0);
        a.op(OP_DUP1);
        a.push1(0x44);
        a.op(0x83);  // DUP4
        a.push1(0);
        a.push1(slot);
        a.op(OP_SLOAD);
        a.op(OP_GAS);
        a.op(OP_CALL);
        a.op(OP_POP);
        break;
    case StorageLoop:
    {
        const int head = a.new_label();
        const int done = a.new_label();
        a.push1(0);
        a.label(head);
        a.push1(slot);
        a.op(OP_SLOAD);
        a.op(OP_DUP2);
        a.op(OP_LT);
        a.op(OP_ISZERO);
        a.push_label(done);
        a.op(OP_JUMPI);
        a.push1(v);
        a.op(OP_DUP2);
        a.op(OP_SSTORE);
        a.push1(1);
        a.op(OP_ADD);
        a.push_label(head);
        a.op(OP_JUMP);
        a.label(done);
        a.op(OP_POP);
        break;
    }
    case EmitEvent:
        a.push1(v);
        a.push1(0);
        a.op(OP_MSTORE);
        a.push_bytes(pseudo_random_bytes(0x10000u + slot, 32));
        a.push1(0x20);
        a.push1(0);
        a.op(OP_LOG1);
        break;
    case FlagGuard:
        a.push1(slot);
        a.op(OP_SLOAD);
        a.push1(0xff);
        a.op(OP_AND);
        a.op(OP_ISZERO);
        revert_unless(a);
        break;
    case ArgumentLoad:
        a.push1(static_cast<uint8_t>(0x04 + 0x20 * (v % 4)));
        a.op(OP_CALLDATALOAD);
        a.push1(slot);
        a.op(OP_SSTORE);
        break;
    case BalanceStore:
        a.op(0x30);  // ADDRESS
        a.op(0x31);  // BALANCE
        a.push1(slot);
        a.op(OP_SSTORE);
        break;
    case DelegateForward:
        a.op(OP_CALLDATASIZE);
        a.push1(0);
        a.op(OP_DUP1);
        a.op(0x37);  // CALLDATACOPY
        a.push1(0);
        a.op(OP_DUP1);
        a.op(OP_CALLDATASIZE);
        a.push1(0);
        a.push1(slot);
        a.op(OP_SLOAD);
        a.op(OP_GAS);
        a.op(OP_DELEGATECALL);
        a.op(OP_POP);
        break;
    case MemoryCopy:
        a.push1(v);
        a.push1(0x04);
        a.push1(0x40);
        a.op(OP_MLOAD);
        a.op(0x37);  // CALLDATACOPY
        break;
    case PowerDivide:
        a.push1(v);
        a.push1(0x0a);
        a.op(OP_EXP);
        a.push1(slot);
        a.op(OP_SLOAD);
        a.op(OP_DIV);
        a.push1(slot);
        a.op(OP_SSTORE);
        break;
    case ShiftMask:
        a.push1(slot);
        a.op(OP_SLOAD);
        a.push1(v);
        a.op(OP_SHR);
        a.push1(0xff);
        a.op(OP_AND);
        a.push1(slot);
        a.op(OP_SSTORE);
        break;
    case ExtcodeGuard:
        a.push_bytes(pseudo_random_bytes(0x20000u + slot, 20));
        a.op(0x3b);  // EXTCODESIZE
        a.op(OP_ISZERO);
        a.op(OP_ISZERO);
        revert_unless(a);
        break;
    case StorageSwap:
        a.push1(slot);
        a.op(OP_SLOAD);
        a.push1(v);
        a.op(OP_SLOAD);
        a.push1(slot);
        a.op(OP_SSTORE);
        a.push1(v);
        a.op(OP_SSTORE);
        break;
    case ConstantCompare:
        a.push(0x0100u + uint64_t{v} * 97u, 2);
        a.push1(slot);
        a.op(OP_SLOAD);
        a.op(OP_GT);
        revert_unless(a);
        break;
    default:
        break;
    }
}

Statement random_statement(Rng& rng, uint8_t kind)
{
    Statement s;
    s.kind = kind;
    s.slot = static_cast<uint8_t>(rng.below(64));
    s.value = static_cast<uint8_t>(1 + rng.below(255));
    return s;
}

Statement random_statement(Rng& rng)
{
    return random_statement(rng, static_cast<uint8_t>(rng.below(KindCount)));
}

void emit_function(Assembler& a, const FunctionTemplate& f, int entry, bool nonpayable_guard)
{
    a.label(entry);
    if (!f.payable && !nonpayable_guard)
    {
        a.op(OP_CALLVALUE);
        a.op(OP_ISZERO);
        revert_unless(a);
    }
    for (const auto& s : f.body)
        emit_statement(a, s);
    if (f.returns_value)
    {
        a.push1(0x40);
        a.op(OP_MLOAD);
        a.push1(f.body.empty() ? 0 : f.body.back().slot);
        a.op(OP_SLOAD);
        a.op(OP_DUP2);
        a.op(OP_MSTORE);
        a.push1(0x20);
        a.op(OP_SWAP1);
        a.op(OP_RETURN);
    }
    else
        a.op(OP_STOP);
}

uint32_t random_selector(Rng& rng)
{
    return 0x01000000u + static_cast<uint32_t>(rng.below(0xff000000u));
}
}  // namespace

size_t statement_kinds() noexcept
{
    return KindCount;
}

std::string selector_name(uint32_t selector)
{
    char buf[16];
    std::snprintf(buf, sizeof(buf), "0x%08x", selector);
    return buf;
}

FunctionTemplate random_function(Rng& rng, const TemplateShape& shape, const TagSet& tags)
{
    FunctionTemplate f;
    f.selector = random_selector(rng);
    f.payable = rng.below(4) == 0;
    f.returns_value = rng.below(2) == 0;
    const auto n = shape.min_statements + rng.below(shape.max_statements - shape.min_statements + 1);
    for (size_t i = 0; i < n; ++i)
        f.body.push_back(random_statement(rng));
    for (const auto t : tags)
    {
        const auto& idioms = tag_idioms().at(t);
        const auto kind = idioms[rng.below(idioms.size())];
        const auto pos = rng.below(f.body.size() + 1);
        f.body.insert(f.body.begin() + static_cast<std::ptrdiff_t>(pos), random_statement(rng, kind));
    }
    return f;
}

ContractTemplate random_template(Rng& rng, const TagSet& tags, const TemplateShape& shape)
{
    ContractTemplate c;
    c.tags = tags;
    c.nonpayable_guard = rng.below(2) == 0;
    const auto n = shape.min_functions + rng.below(shape.max_functions - shape.min_functions + 1);
    // the vulnerable idioms live in the first function; the rest are plain
    for (size_t i = 0; i < n; ++i)
        c.functions.push_back(random_function(rng, shape, i == 0 ? tags : TagSet{}));
    return c;
}

FunctionTemplate delete_statement(const FunctionTemplate& f, Rng& rng)
{
    auto out = f;
    if (out.body.size() > 1)
        out.body.erase(out.body.begin() + static_cast<std::ptrdiff_t>(rng.below(out.body.size())));
    return out;
}

ContractTemplate rewrite(const ContractTemplate& base, Rng& rng, size_t edits)
{
    auto c = base;
    for (size_t e = 0; e < edits; ++e)
    {
        auto& f = c.functions[rng.below(c.functions.size())];
        switch (rng.below(4))
        {
        case 0:
            f = delete_statement(f, rng);
            break;
        case 1:
        {
            const auto pos = rng.below(f.body.size() + 1);
            f.body.insert(f.body.begin() + static_cast<std::ptrdiff_t>(pos), random_statement(rng));
            break;
        }
        case 2:
            f.body[rng.below(f.body.size())].value = static_cast<uint8_t>(1 + rng.below(255));
            break;
        default:
            if (f.body.size() > 1)
            {
                const auto i = rng.below(f.body.size() - 1);
                std::swap(f.body[i], f.body[i + 1]);
            }
            break;
        }
    }
    return c;
}

bytes assemble(const ContractTemplate& contract)
{
    Assembler a;
    std::vector<int> entries;
    for (size_t i = 0; i < contract.functions.size(); ++i)
        entries.push_back(a.new_label());
    const int fallback = a.new_label();

    a.push1(0x80);
    a.push1(0x40);
    a.op(OP_MSTORE);
    if (contract.nonpayable_guard)
    {
        a.op(OP_CALLVALUE);
        a.op(OP_DUP1);
        a.op(OP_ISZERO);
        const int ok = a.new_label();
        a.push_label(ok);
        a.op(OP_JUMPI);
        a.push1(0);
        a.op(OP_DUP1);
        a.op(OP_REVERT);
        a.label(ok);
        a.op(OP_POP);
    }
    a.push1(0x04);
    a.op(OP_CALLDATASIZE);
    a.op(OP_LT);
    a.push_label(fallback);
    a.op(OP_JUMPI);
    a.push1(0);
    a.op(OP_CALLDATALOAD);
    a.push1(0xe0);
    a.op(OP_SHR);
    for (size_t i = 0; i < contract.functions.size(); ++i)
    {
        a.op(OP_DUP1);
        a.push(contract.functions[i].selector, 4);
        a.op(OP_EQ);
        a.push_label(entries[i]);
        a.op(OP_JUMPI);
    }
    a.label(fallback);
    a.push1(0);
    a.op(OP_DUP1);
    a.op(OP_REVERT);

    for (size_t i = 0; i < contract.functions.size(); ++i)
        emit_function(a, contract.functions[i], entries[i], contract.nonpayable_guard);
    return a.finish();
}

LabelStore LabeledCorpus::labels() const
{
    std::map<ContractKey, TagSet> entries;
    for (const auto& f : files)
    {
        if (!f.tags.empty())
            entries[{f.name, std::string{default_contract_name}}] = f.tags;
    }
    return LabelStore{std::move(entries)};
}

std::vector<ContractFile> LabeledCorpus::contract_files() const
{
    std::vector<ContractFile> out;
    for (const auto& f : files)
        out.push_back(build_contract_file(f.name, f.code));
    return out;
}

LabeledCorpus vulnerable_corpus(
    size_t templates, size_t variants, uint64_t seed, size_t edits, const TemplateShape& shape)
{
    Rng rng{seed};
    LabeledCorpus corpus;
    for (size_t t = 0; t < templates; ++t)
    {
        TagSet tags{all_tags[t % tag_count]};
        if (rng.below(4) == 0)
            tags.insert(all_tags[rng.below(tag_count)]);
        const auto base = random_template(rng, tags, shape);
        for (size_t v = 0; v < variants; ++v)
        {
            char name[48];
            std::snprintf(name, sizeof(name), "t%02zu_v%zu", t, v);
            corpus.files.push_back({name, assemble(rewrite(base, rng, edits)), tags});
        }
    }
    return corpus;
}

void write_corpus(const LabeledCorpus& corpus, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    for (const auto& f : corpus.files)
        write_text_file(dir / (f.name + ".hex"), to_hex(f.code) + "\n");
    write_text_file(dir / "labels.csv", format_labels(corpus.labels()));
}
}  // namespace eth2vec::synthetic

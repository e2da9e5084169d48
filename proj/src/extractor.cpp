// eth2vec: EVM bytecode embeddings for clone and vulnerability detection
// SPDX-License-Identifier: Apache-2.0

#include <eth2vec/extractor.hpp>
#include <eth2vec/opcodes.hpp>

#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <map>

namespace eth2vec
{
using json = nlohmann::ordered_json;

std::string md5_hex(bytes_view data)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_md5(), nullptr) != 1)
        throw Error{"md5 digest failed"};
    return to_hex(bytes_view{digest, len});
}

ContractFile build_contract_file(std::string name, bytes_view code)
{
    return build_contract_file(
        std::move(name), std::vector<NamedBlob>{{std::string{default_contract_name},
                             bytes(code.begin(), code.end())}});
}

ContractFile build_contract_file(std::string name, const std::vector<NamedBlob>& blobs)
{
    ContractFile file;
    file.name = std::move(name);

    bytes all;
    for (const auto& blob : blobs)
    {
        all.insert(all.end(), blob.code.begin(), blob.code.end());
        if (blob.code.empty())
            continue;
        file.contracts.push_back({blob.name, extract_functions(blob.code)});
    }
    file.md5 = md5_hex(all);
    return file;
}

bytes contract_code(const Contract& contract)
{
    std::vector<const BasicBlock*> blocks;
    for (const auto& f : contract.functions)
        for (const auto& b : f.blocks)
            blocks.push_back(&b);
    std::sort(blocks.begin(), blocks.end(),
        [](const BasicBlock* a, const BasicBlock* b) { return a->start_offset < b->start_offset; });
    bytes code;
    for (const auto* b : blocks)
        code.insert(code.end(), b->code.begin(), b->code.end());
    return code;
}

std::string recompute_md5(const ContractFile& file)
{
    bytes all;
    for (const auto& c : file.contracts)
    {
        const auto code = contract_code(c);
        all.insert(all.end(), code.begin(), code.end());
    }
    return md5_hex(all);
}

TokenizedInstruction tokenize(const Instruction& instruction, Normalization policy)
{
    (void)policy;  // v1 is the only policy
    TokenizedInstruction t;
    t.operation = instruction.mnemonic;
    const auto& op = instruction.operand;
    if (op.empty())
        return t;

    const auto n = op.size();
    const bool small = std::all_of(op.begin(), op.end() - 1, [](uint8_t b) { return b == 0; });
    char buf[16];
    if (small)
    {
        std::snprintf(buf, sizeof(buf), "0x%02x", op.back());
        t.operands.emplace_back(buf);
    }
    else if (n == 4)
        t.operands.push_back(to_hex_prefixed(op));
    else if (n == 20)
        t.operands.emplace_back("ADDR");
    else if (n == 32)
        t.operands.emplace_back("HASH32");
    else
        t.operands.push_back("CONST" + std::to_string(n));
    return t;
}

std::string format_src_line(const Instruction& instruction)
{
    std::string s = std::to_string(instruction.offset) + ": " + instruction.mnemonic;
    if (!instruction.operand.empty())
        s += " " + to_hex_prefixed(instruction.operand);
    return s;
}

Instruction parse_src_line(std::string_view line)
{
    const auto colon = line.find(": ");
    if (colon == std::string_view::npos || colon == 0)
        throw Error{"expected '<offset>: <mnemonic>'"};

    Instruction in;
    const auto off = line.substr(0, colon);
    const auto [ptr, ec] = std::from_chars(off.data(), off.data() + off.size(), in.offset);
    if (ec != std::errc{} || ptr != off.data() + off.size())
        throw Error{"bad offset '" + std::string{off} + "'"};

    auto rest = line.substr(colon + 2);
    const auto space = rest.find(' ');
    const auto name = rest.substr(0, space);
    const auto opcode = opcode_from_mnemonic(name);
    if (!opcode)
        throw Error{"unknown mnemonic '" + std::string{name} + "'"};
    in.opcode = *opcode;
    in.mnemonic = std::string{name};

    const auto width = immediate_size(in.opcode);
    if (space != std::string_view::npos)
    {
        const auto operand = rest.substr(space + 1);
        if (operand.substr(0, 2) != "0x")
            throw Error{"operand must be 0x-prefixed"};
        try
        {
            in.operand = from_hex(operand);
        }
        catch (const HexError& e)
        {
            throw Error{std::string{"bad operand: "} + e.what()};
        }
    }
    if (in.operand.size() != width)
        throw Error{in.mnemonic + " expects " + std::to_string(width) + " operand bytes, got " +
                    std::to_string(in.operand.size())};
    return in;
}

namespace
{
json to_json(const BasicBlock& b)
{
    json j;
    j["name"] = b.name;
    j["bytes"] = to_hex_prefixed(b.code);
    j["sea"] = b.start_offset;
    j["eea"] = b.end_offset;
    j["id"] = b.id;
    j["call"] = b.callees;
    json src = json::array();
    for (const auto& in : b.instructions)
        src.push_back(format_src_line(in));
    j["src"] = std::move(src);
    return j;
}

json to_json(const FunctionUnit& f, const std::string& contract)
{
    json j;
    j["name"] = f.name;
    j["sea"] = f.start_offset;
    j["see"] = f.end_offset;
    j["id"] = f.id;
    j["call"] = f.callees;
    json blocks = json::array();
    for (const auto& b : f.blocks)
        blocks.push_back(to_json(b));
    j["blocks"] = std::move(blocks);
    j["contract"] = contract;
    return j;
}

/// Schema reader that tracks the current JSON path for error messages.
class Reader
{
public:
    static const json& field(const json& obj, const std::string& path, const char* key)
    {
        if (!obj.is_object())
            throw SchemaError{path, "expected an object"};
        const auto it = obj.find(key);
        if (it == obj.end())
            throw SchemaError{join(path, key), "missing required field"};
        return *it;
    }

    static std::string string(const json& obj, const std::string& path, const char* key)
    {
        const auto& v = field(obj, path, key);
        if (!v.is_string())
            throw SchemaError{join(path, key), "expected a string"};
        return v.get<std::string>();
    }

    static uint64_t number(const json& obj, const std::string& path, const char* key)
    {
        const auto& v = field(obj, path, key);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<int64_t>() >= 0))
            throw SchemaError{join(path, key), "expected a non-negative integer"};
        return v.get<uint64_t>();
    }

    static const json& array(const json& obj, const std::string& path, const char* key)
    {
        const auto& v = field(obj, path, key);
        if (!v.is_array())
            throw SchemaError{join(path, key), "expected a list"};
        return v;
    }

    static std::vector<uint32_t> ids(const json& obj, const std::string& path, const char* key)
    {
        const auto& arr = array(obj, path, key);
        std::vector<uint32_t> out;
        for (size_t i = 0; i < arr.size(); ++i)
        {
            if (!arr[i].is_number_unsigned())
                throw SchemaError{index(join(path, key), i), "expected a non-negative integer"};
            out.push_back(arr[i].get<uint32_t>());
        }
        return out;
    }

    static std::string join(const std::string& path, const char* key)
    {
        return path == "$" ? std::string{key} : path + "." + key;
    }

    static std::string index(const std::string& path, size_t i)
    {
        return path + "[" + std::to_string(i) + "]";
    }
};

BasicBlock block_from_json(const json& j, const std::string& path)
{
    using R = Reader;
    BasicBlock b;
    b.name = R::string(j, path, "name");
    try
    {
        b.code = from_hex(R::string(j, path, "bytes"));
    }
    catch (const HexError& e)
    {
        throw SchemaError{R::join(path, "bytes"), e.what()};
    }
    b.start_offset = R::number(j, path, "sea");
    b.end_offset = R::number(j, path, "eea");
    b.id = static_cast<uint32_t>(R::number(j, path, "id"));
    b.callees = R::ids(j, path, "call");
    const auto& src = R::array(j, path, "src");
    const auto src_path = R::join(path, "src");
    for (size_t i = 0; i < src.size(); ++i)
    {
        if (!src[i].is_string())
            throw SchemaError{R::index(src_path, i), "expected a string"};
        try
        {
            b.instructions.push_back(parse_src_line(src[i].get<std::string>()));
        }
        catch (const SchemaError&)
        {
            throw;
        }
        catch (const Error& e)
        {
            throw SchemaError{R::index(src_path, i), e.what()};
        }
    }
    if (b.instructions.empty())
        throw SchemaError{src_path, "block has no instructions"};
    return b;
}

FunctionUnit function_from_json(const json& j, const std::string& path)
{
    using R = Reader;
    FunctionUnit f;
    f.name = R::string(j, path, "name");
    f.start_offset = R::number(j, path, "sea");
    f.end_offset = R::number(j, path, "see");
    f.id = static_cast<uint32_t>(R::number(j, path, "id"));
    f.callees = R::ids(j, path, "call");
    const auto& blocks = R::array(j, path, "blocks");
    const auto blocks_path = R::join(path, "blocks");
    for (size_t i = 0; i < blocks.size(); ++i)
        f.blocks.push_back(block_from_json(blocks[i], R::index(blocks_path, i)));
    if (f.blocks.empty())
        throw SchemaError{blocks_path, "function has no blocks"};
    return f;
}
}  // namespace

std::string serialize(const ContractFile& file)
{
    json data;
    data["name"] = file.name;
    data["md5"] = file.md5;
    json functions = json::array();
    for (const auto& c : file.contracts)
        for (const auto& f : c.functions)
            functions.push_back(to_json(f, c.name));
    data["functions"] = std::move(functions);

    json root;
    root["data"] = std::move(data);
    root["meta"] = {{"evm", std::string{evm_revision}},
        {"normalization", static_cast<uint32_t>(default_normalization)}};
    return root.dump(2) + "\n";
}

ContractFile deserialize(std::string_view text)
{
    using R = Reader;
    json root;
    try
    {
        root = json::parse(text);
    }
    catch (const json::parse_error& e)
    {
        throw SchemaError{"$", std::string{"invalid JSON: "} + e.what()};
    }

    const auto& data = R::field(root, "$", "data");
    ContractFile file;
    file.name = R::string(data, "data", "name");
    file.md5 = R::string(data, "data", "md5");
    if (file.md5.size() != 32 ||
        !std::all_of(file.md5.begin(), file.md5.end(),
            [](char c) { return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'); }))
        throw SchemaError{"data.md5", "expected 32 lowercase hex digits"};

    const auto& functions = R::array(data, "data", "functions");
    std::map<std::string, size_t> contract_index;
    for (size_t i = 0; i < functions.size(); ++i)
    {
        const auto path = R::index("data.functions", i);
        auto f = function_from_json(functions[i], path);

        std::string contract{default_contract_name};
        if (functions[i].contains("contract"))
            contract = R::string(functions[i], path, "contract");

        auto [it, inserted] = contract_index.try_emplace(contract, file.contracts.size());
        if (inserted)
            file.contracts.push_back({contract, {}});
        auto& target = file.contracts[it->second];
        for (const auto& existing : target.functions)
        {
            if (existing.id == f.id)
                throw SchemaError{R::join(path, "id"),
                    "duplicate function id " + std::to_string(f.id) + " in contract " + contract};
        }
        target.functions.push_back(std::move(f));
    }
    return file;
}
}  // namespace eth2vec

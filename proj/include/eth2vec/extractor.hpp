// eth2vec: EVM bytecode embeddings for clone and vulnerability detection
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <eth2vec/bytes.hpp>
#include <eth2vec/disassembler.hpp>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace eth2vec
{
/// One bytecode blob: a contract (libraries are contracts of their own).
struct Contract
{
    std::string name;
    std::vector<FunctionUnit> functions;

    bool operator==(const Contract&) const = default;
};

/// Top level of the extraction hierarchy: one input file.
struct ContractFile
{
    std::string name;
    std::string md5;  ///< lowercase hex digest of the concatenated input blobs
    std::vector<Contract> contracts;

    bool operator==(const ContractFile&) const = default;
};

struct NamedBlob
{
    std::string name;
    bytes code;
};

/// Contract name given to a file holding a single anonymous blob.
inline constexpr std::string_view default_contract_name = "main";

std::string md5_hex(bytes_view data);

/// Single-blob file. Empty code yields a file with zero contracts.
ContractFile build_contract_file(std::string name, bytes_view code);

/// Multi-contract file; empty blobs are skipped. The digest covers the
/// concatenation of all blobs in order.
ContractFile build_contract_file(std::string name, const std::vector<NamedBlob>& blobs);

/// Reassembles a contract's code from its blocks (ordered by start offset).
bytes contract_code(const Contract& contract);

/// Digest over the code reassembled from every contract's blocks.
std::string recompute_md5(const ContractFile& file);

// --- tokenization ---------------------------------------------------------

/// Operand normalization policy. Stored in model files so that training and
/// inference always tokenize identically.
enum class Normalization : uint32_t
{
    /// PUSH value <= 0xff -> "0xVV"; PUSH4 -> full hex selector;
    /// PUSH20 -> "ADDR"; PUSH32 -> "HASH32"; other widths -> "CONST<N>".
    v1 = 1,
};

inline constexpr Normalization default_normalization = Normalization::v1;

struct TokenizedInstruction
{
    std::string operation;
    std::vector<std::string> operands;

    bool operator==(const TokenizedInstruction&) const = default;
};

TokenizedInstruction tokenize(
    const Instruction& instruction, Normalization policy = default_normalization);

// --- extraction schema ----------------------------------------------------

/// Schema violation while reading an extraction file. `path()` names the
/// offending location, e.g. "data.functions[0].blocks[1].sea".
class SchemaError : public Error
{
public:
    SchemaError(std::string path, const std::string& what)
      : Error{path + ": " + what}, path_{std::move(path)}
    {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

/// "<offset>: <MNEMONIC>[ 0x<operand>]"
std::string format_src_line(const Instruction& instruction);
Instruction parse_src_line(std::string_view line);

/// Serializes to the extraction JSON schema
/// (data -> name, md5, functions -> blocks -> src).
std::string serialize(const ContractFile& file);

/// Inverse of serialize. Throws SchemaError on missing fields or bad nesting.
ContractFile deserialize(std::string_view json);
}  // namespace eth2vec

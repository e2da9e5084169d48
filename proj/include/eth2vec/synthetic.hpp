// eth2vec: EVM bytecode embeddings for clone and vulnerability detection
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Generator of Solidity-shaped runtime bytecode for experiments: a selector
// dispatcher followed by function bodies assembled from a library of
// statement idioms (storage updates, guarded calls, loops, logs, ...).
// Templates can be rewritten statement-wise to obtain type-III clones.

#include <eth2vec/bytes.hpp>
#include <eth2vec/extractor.hpp>
#include <eth2vec/labels.hpp>
#include <eth2vec/random.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace eth2vec::synthetic
{
/// One source-level statement: an idiom kind with fixed parameters.
struct Statement
{
    uint8_t kind = 0;
    uint8_t slot = 0;
    uint8_t value = 0;

    bool operator==(const Statement&) const = default;
};

struct FunctionTemplate
{
    uint32_t selector = 0;
    bool payable = false;
    bool returns_value = false;
    std::vector<Statement> body;

    bool operator==(const FunctionTemplate&) const = default;
};

struct ContractTemplate
{
    bool nonpayable_guard = false;
    std::vector<FunctionTemplate> functions;
    TagSet tags;

    bool operator==(const ContractTemplate&) const = default;
};

struct TemplateShape
{
    size_t min_functions = 2;
    size_t max_functions = 4;
    size_t min_statements = 6;
    size_t max_statements = 12;
};

size_t statement_kinds() noexcept;

/// Selector name as produced by the extractor ("0x" + 8 hex digits).
std::string selector_name(uint32_t selector);

FunctionTemplate random_function(Rng& rng, const TemplateShape& shape, const TagSet& tags);

/// Random contract whose bodies contain at least one idiom typical of each tag.
ContractTemplate random_template(Rng& rng, const TagSet& tags, const TemplateShape& shape = {});

/// Type-III rewrite: `edits` random statement deletions, insertions,
/// constant changes or adjacent swaps spread over the functions.
ContractTemplate rewrite(const ContractTemplate& base, Rng& rng, size_t edits);

/// Removes one random statement (the body keeps at least one).
FunctionTemplate delete_statement(const FunctionTemplate& f, Rng& rng);

/// Runtime bytecode for the template.
bytes assemble(const ContractTemplate& contract);

struct LabeledFile
{
    std::string name;
    bytes code;
    TagSet tags;
};

struct LabeledCorpus
{
    std::vector<LabeledFile> files;

    LabelStore labels() const;
    std::vector<ContractFile> contract_files() const;
};

/// `templates` templates, each tagged with one or two vulnerabilities (all
/// tags covered round-robin), and `variants` independent rewrites of each
/// with `edits` edits. Files are named "tNN_vM".
LabeledCorpus vulnerable_corpus(
    size_t templates, size_t variants, uint64_t seed, size_t edits = 2,
    const TemplateShape& shape = {});

/// Writes <dir>/<name>.hex per file and <dir>/labels.csv.
void write_corpus(const LabeledCorpus& corpus, const std::filesystem::path& dir);
}  // namespace eth2vec::synthetic

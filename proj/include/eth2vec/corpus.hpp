// eth2vec: EVM bytecode embeddings for clone and vulnerability detection
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <eth2vec/extractor.hpp>

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace eth2vec
{
/// Parses the text of a .hex file.
///
/// A plain file is one anonymous blob (contract "main"); whitespace and an
/// optional 0x prefix are ignored. Multi-contract files mark each blob with a
/// header line ">Name" followed by its hex. Lines starting with '#' are
/// comments. Throws HexError on malformed digits.
std::vector<NamedBlob> parse_hex_file(std::string_view text);

/// Reads and extracts one .hex file; the file stem becomes the ContractFile name.
ContractFile load_contract_file(const std::filesystem::path& path);

/// All .hex files under `root` (recursive), sorted by path. A regular file
/// argument is returned as-is. Throws Error if `root` does not exist.
std::vector<std::filesystem::path> list_hex_files(const std::filesystem::path& root);

struct CorpusIssue
{
    std::filesystem::path path;
    std::string message;
};

struct Corpus
{
    std::vector<ContractFile> files;
    std::vector<CorpusIssue> issues;  ///< files skipped as malformed
};

/// Loads every .hex file under the given roots. Malformed files and
/// duplicate stems are skipped and reported in `issues`.
Corpus load_corpus(const std::vector<std::filesystem::path>& roots);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);
}  // namespace eth2vec

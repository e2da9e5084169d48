// eth2vec: EVM bytecode embeddings for clone and vulnerability detection
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <eth2vec/bytes.hpp>

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>

namespace eth2vec
{
/// Vulnerability taxonomy.
enum class Tag : uint8_t
{
    Reentrancy,
    TimeDependency,
    ERC20Transfer,
    GasConsumption,
    ImplicitVisibility,
    IntegerOverflow,
    IntegerUnderflow,
};

inline constexpr size_t tag_count = 7;

inline constexpr std::array<Tag, tag_count> all_tags = {Tag::Reentrancy, Tag::TimeDependency,
    Tag::ERC20Transfer, Tag::GasConsumption, Tag::ImplicitVisibility, Tag::IntegerOverflow,
    Tag::IntegerUnderflow};

std::string_view tag_name(Tag tag) noexcept;
std::optional<Tag> tag_from_name(std::string_view name) noexcept;

/// SmartCheck severity: 3 Reentrancy, 2 TimeDependency, 1 otherwise.
int severity(Tag tag) noexcept;

constexpr size_t tag_index(Tag tag) noexcept
{
    return static_cast<size_t>(tag);
}

/// (contract-file name, contract name)
using ContractKey = std::pair<std::string, std::string>;
using TagSet = std::set<Tag>;

class LabelError : public Error
{
public:
    using Error::Error;
};

/// Immutable mapping from contracts to their known vulnerabilities.
class LabelStore
{
public:
    LabelStore() = default;
    explicit LabelStore(std::map<ContractKey, TagSet> entries) : entries_{std::move(entries)} {}

    /// Empty set for contracts without labels.
    const TagSet& tags(const ContractKey& key) const;

    bool has(const ContractKey& key, Tag tag) const { return tags(key).contains(tag); }

    const std::map<ContractKey, TagSet>& entries() const noexcept { return entries_; }
    size_t size() const noexcept { return entries_.size(); }

    bool operator==(const LabelStore&) const = default;

private:
    std::map<ContractKey, TagSet> entries_;
};

/// Parses "file,contract,tag" CSV text (header required). Duplicate rows
/// collapse; unknown tags raise LabelError naming the row.
LabelStore parse_labels(std::string_view csv);

LabelStore load_labels(const std::filesystem::path& path);

/// Writes the CSV form, one row per (contract, tag), in sorted order.
std::string format_labels(const LabelStore& labels);
}  // namespace eth2vec

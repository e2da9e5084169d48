// eth2vec: EVM bytecode embeddings for clone and vulnerability detection
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <eth2vec/labels.hpp>
#include <eth2vec/model.hpp>

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace eth2vec
{
inline constexpr double default_clone_threshold = 0.8;
inline constexpr size_t default_top_k = 5;

/// Euclidean norm, accumulated in double.
double norm(std::span<const float> v) noexcept;

/// u.v / (|u||v|) clamped to [-1, 1]; 0 when either norm is 0.
/// Throws Error on a dimension mismatch.
double cosine(std::span<const float> u, std::span<const float> v);

struct IndexEntry
{
    FunctionId id;
    std::vector<float> vector;
    double norm = 0.0;
};

/// Function vectors of the training corpus, scanned linearly.
class VectorIndex
{
public:
    explicit VectorIndex(size_t dim) : dim_{dim} {}

    /// All function vectors stored in a trained model.
    static VectorIndex from_model(const Model& model);

    /// Throws Error on duplicate identity or wrong dimension.
    void add(FunctionId id, std::vector<float> vector);

    size_t dim() const noexcept { return dim_; }
    size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    const std::vector<IndexEntry>& entries() const noexcept { return entries_; }

    /// Mean of each contract's function vectors.
    std::map<ContractKey, std::vector<float>> contract_vectors() const;

private:
    size_t dim_;
    std::vector<IndexEntry> entries_;
    std::map<FunctionId, size_t> ids_;
};

struct CloneMatch
{
    FunctionId query;
    FunctionId match;
    double similarity = 0.0;
    TagSet tags;  ///< vulnerabilities of the matched function's contract

    bool operator==(const CloneMatch&) const = default;
};

struct CloneSearch
{
    double threshold = default_clone_threshold;
    size_t top_k = default_top_k;  ///< 0 = unlimited
    /// Skip index entries with the query's own identity.
    bool exclude_self = false;
};

/// Entries with similarity >= threshold, ordered by (similarity desc, id asc)
/// and truncated to top_k. Tags are filled in from `labels` when given.
std::vector<CloneMatch> find_clones(const FunctionId& query_id, std::span<const float> query,
    const VectorIndex& index, const CloneSearch& search = {}, const LabelStore* labels = nullptr);

/// Per-tag scores for one test contract.
struct VulnerabilityReport
{
    double threshold = default_clone_threshold;
    std::array<double, tag_count> epsilon{};
    std::array<std::vector<CloneMatch>, tag_count> evidence;

    double score(Tag tag) const { return epsilon[tag_index(tag)]; }
    bool predicted(Tag tag) const { return score(tag) >= threshold; }
    TagSet predictions() const;
};

/// "dispatch" and "orphan": selector routing and unreachable tails that every
/// compiled contract shares, as opposed to user functions.
bool is_scaffold_function(std::string_view name) noexcept;

/// epsilon(tag) = max similarity over matches whose contract carries the tag,
/// 0 without such evidence. Tags are looked up in `labels`. Matches whose
/// query or target is a scaffold function are ignored unless
/// `include_scaffold` is set.
VulnerabilityReport propagate_labels(std::span<const CloneMatch> matches,
    const LabelStore& labels, double threshold = default_clone_threshold,
    bool include_scaffold = false);
}  // namespace eth2vec

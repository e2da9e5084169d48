// eth2vec: EVM bytecode embeddings for clone and vulnerability detection
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <eth2vec/extractor.hpp>
#include <eth2vec/random.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace eth2vec
{
using TokenId = uint32_t;

/// Token <-> id bijection with corpus frequencies and the negative-sampling
/// noise distribution P_n(t) proportional to freq(t)^0.75.
///
/// Id 0 is always "UNK", which absorbs tokens below min_count and any token
/// unseen at training time. Its count may be zero, in which case it is never
/// drawn as a negative.
class Vocabulary
{
public:
    static constexpr std::string_view unknown = "UNK";
    static constexpr TokenId unknown_id = 0;
    static constexpr double noise_power = 0.75;

    Vocabulary();

    /// Throws Error for an empty count table.
    static Vocabulary build(const std::map<std::string, uint64_t>& counts, uint64_t min_count);

    /// Restores a vocabulary from (token, count) pairs in id order; the first
    /// entry must be UNK.
    static Vocabulary from_entries(std::vector<std::pair<std::string, uint64_t>> entries);

    size_t size() const noexcept { return tokens_.size(); }

    /// UNK-folding lookup.
    TokenId id(std::string_view token) const;
    bool contains(std::string_view token) const;

    const std::string& token(TokenId id) const { return tokens_.at(id); }
    uint64_t count(TokenId id) const { return counts_.at(id); }
    double noise_probability(TokenId id) const { return noise_.at(id); }

    /// Draws one token from P_n.
    TokenId sample(Rng& rng) const;

    bool operator==(const Vocabulary& other) const
    {
        return tokens_ == other.tokens_ && counts_ == other.counts_;
    }

private:
    void finalize();

    std::vector<std::string> tokens_;
    std::vector<uint64_t> counts_;
    std::vector<double> noise_;
    std::vector<double> cumulative_;
    std::unordered_map<std::string, TokenId> index_;
};

/// Token frequencies over every instruction of every function in the corpus.
std::map<std::string, uint64_t> count_tokens(
    const std::vector<ContractFile>& corpus, Normalization policy = default_normalization);
}  // namespace eth2vec

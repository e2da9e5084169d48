// eth2vec: EVM bytecode embeddings for clone and vulnerability detection
// SPDX-License-Identifier: Apache-2.0

#include <eth2vec/vocabulary.hpp>

#include <algorithm>
#include <cmath>

namespace eth2vec
{
Vocabulary::Vocabulary()
{
    tokens_.emplace_back(unknown);
    counts_.push_back(0);
    finalize();
}

Vocabulary Vocabulary::build(const std::map<std::string, uint64_t>& counts, uint64_t min_count)
{
    if (counts.empty())
        throw Error{"cannot build a vocabulary from an empty corpus"};

    uint64_t folded = 0;
    std::vector<std::pair<std::string, uint64_t>> kept;
    for (const auto& [token, count] : counts)
    {
        if (token == unknown || count < min_count)
            folded += count;
        else
            kept.emplace_back(token, count);
    }
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });

    std::vector<std::pair<std::string, uint64_t>> entries;
    entries.emplace_back(std::string{unknown}, folded);
    entries.insert(entries.end(), kept.begin(), kept.end());
    return from_entries(std::move(entries));
}

Vocabulary Vocabulary::from_entries(std::vector<std::pair<std::string, uint64_t>> entries)
{
    if (entries.empty() || entries.front().first != unknown)
        throw Error{"vocabulary must start with " + std::string{unknown}};
    Vocabulary v;
    v.tokens_.clear();
    v.counts_.clear();
    for (auto& [token, count] : entries)
    {
        v.tokens_.push_back(std::move(token));
        v.counts_.push_back(count);
    }
    v.finalize();
    if (v.index_.size() != v.tokens_.size())
        throw Error{"vocabulary contains duplicate tokens"};
    return v;
}

void Vocabulary::finalize()
{
    index_.clear();
    for (size_t i = 0; i < tokens_.size(); ++i)
        index_.emplace(tokens_[i], static_cast<TokenId>(i));

    noise_.assign(tokens_.size(), 0.0);
    double total = 0.0;
    for (size_t i = 0; i < tokens_.size(); ++i)
    {
        noise_[i] = std::pow(static_cast<double>(counts_[i]), noise_power);
        total += noise_[i];
    }
    cumulative_.assign(tokens_.size(), 0.0);
    double running = 0.0;
    for (size_t i = 0; i < tokens_.size(); ++i)
    {
        if (total > 0.0)
            noise_[i] /= total;
        running += noise_[i];
        cumulative_[i] = running;
    }
}

TokenId Vocabulary::id(std::string_view token) const
{
    const auto it = index_.find(std::string{token});
    return it == index_.end() ? unknown_id : it->second;
}

bool Vocabulary::contains(std::string_view token) const
{
    return index_.contains(std::string{token});
}

TokenId Vocabulary::sample(Rng& rng) const
{
    const double u = rng.uniform() * cumulative_.back();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end())
        --it;
    // skip zero-probability entries that share a cumulative value
    auto id = static_cast<size_t>(it - cumulative_.begin());
    while (noise_[id] == 0.0 && id + 1 < noise_.size())
        ++id;
    return static_cast<TokenId>(id);
}

std::map<std::string, uint64_t> count_tokens(
    const std::vector<ContractFile>& corpus, Normalization policy)
{
    std::map<std::string, uint64_t> counts;
    for (const auto& file : corpus)
        for (const auto& contract : file.contracts)
            for (const auto& function : contract.functions)
                for (const auto& block : function.blocks)
                    for (const auto& in : block.instructions)
                    {
                        const auto t = tokenize(in, policy);
                        ++counts[t.operation];
                        for (const auto& a : t.operands)
                            ++counts[a];
                    }
    return counts;
}
}  // namespace eth2vec

// eth2vec: EVM bytecode embeddings for clone and vulnerability detection
// SPDX-License-Identifier: Apache-2.0

#include <eth2vec/detection.hpp>

#include <algorithm>
#include <cmath>
#include <queue>

namespace eth2vec
{
namespace
{
double dot(std::span<const float> u, std::span<const float> v) noexcept
{
    double s = 0.0;
    for (size_t i = 0; i < u.size(); ++i)
        s += double{u[i]} * double{v[i]};
    return s;
}

/// Shared by cosine() and the index scan so both give bit-identical values.
double similarity(std::span<const float> u, double u_norm, std::span<const float> v, double v_norm)
{
    if (u_norm == 0.0 || v_norm == 0.0)
        return 0.0;
    return std::clamp(dot(u, v) / (u_norm * v_norm), -1.0, 1.0);
}

bool ranks_before(const CloneMatch& a, const CloneMatch& b)
{
    if (a.similarity != b.similarity)
        return a.similarity > b.similarity;
    return a.match < b.match;
}
}  // namespace

double norm(std::span<const float> v) noexcept
{
    return std::sqrt(dot(v, v));
}

double cosine(std::span<const float> u, std::span<const float> v)
{
    if (u.size() != v.size())
        throw Error{"cosine: dimension mismatch (" + std::to_string(u.size()) + " vs " +
                    std::to_string(v.size()) + ")"};
    return similarity(u, norm(u), v, norm(v));
}

VectorIndex VectorIndex::from_model(const Model& model)
{
    VectorIndex index{model.function_dim()};
    for (size_t i = 0; i < model.functions.size(); ++i)
    {
        const auto v = model.function_vector(i);
        index.add(model.functions[i], {v.begin(), v.end()});
    }
    return index;
}

void VectorIndex::add(FunctionId id, std::vector<float> vector)
{
    if (vector.size() != dim_)
        throw Error{"index: vector for " + id.str() + " has dimension " +
                    std::to_string(vector.size()) + ", expected " + std::to_string(dim_)};
    if (!ids_.emplace(id, entries_.size()).second)
        throw Error{"index: duplicate function identity " + id.str()};
    const double n = norm(vector);
    entries_.push_back({std::move(id), std::move(vector), n});
}

std::map<ContractKey, std::vector<float>> VectorIndex::contract_vectors() const
{
    std::map<ContractKey, std::pair<std::vector<double>, size_t>> sums;
    for (const auto& e : entries_)
    {
        auto& [sum, n] = sums[e.id.contract_key()];
        sum.resize(dim_, 0.0);
        for (size_t i = 0; i < dim_; ++i)
            sum[i] += e.vector[i];
        ++n;
    }
    std::map<ContractKey, std::vector<float>> out;
    for (const auto& [key, acc] : sums)
    {
        std::vector<float> mean(dim_);
        for (size_t i = 0; i < dim_; ++i)
            mean[i] = static_cast<float>(acc.first[i] / static_cast<double>(acc.second));
        out.emplace(key, std::move(mean));
    }
    return out;
}

std::vector<CloneMatch> find_clones(const FunctionId& query_id, std::span<const float> query,
    const VectorIndex& index, const CloneSearch& search, const LabelStore* labels)
{
    if (query.size() != index.dim())
        throw Error{"find_clones: query dimension " + std::to_string(query.size()) +
                    " does not match index dimension " + std::to_string(index.dim())};

    // Bounded heap whose top is the weakest kept match.
    auto weaker = [](const CloneMatch& a, const CloneMatch& b) { return ranks_before(a, b); };
    std::priority_queue<CloneMatch, std::vector<CloneMatch>, decltype(weaker)> kept{weaker};

    const double qn = norm(query);
    for (const auto& e : index.entries())
    {
        if (search.exclude_self && e.id == query_id)
            continue;
        const double s = similarity(query, qn, e.vector, e.norm);
        if (s < search.threshold)
            continue;
        CloneMatch m{query_id, e.id, s, {}};
        if (search.top_k != 0 && kept.size() == search.top_k)
        {
            if (!ranks_before(m, kept.top()))
                continue;
            kept.pop();
        }
        kept.push(std::move(m));
    }

    std::vector<CloneMatch> out;
    out.reserve(kept.size());
    while (!kept.empty())
    {
        out.push_back(kept.top());
        kept.pop();
    }
    std::reverse(out.begin(), out.end());
    if (labels)
    {
        for (auto& m : out)
            m.tags = labels->tags(m.match.contract_key());
    }
    return out;
}

TagSet VulnerabilityReport::predictions() const
{
    TagSet out;
    for (const auto t : all_tags)
    {
        if (predicted(t))
            out.insert(t);
    }
    return out;
}

bool is_scaffold_function(std::string_view name) noexcept
{
    return name == "dispatch" || name == "orphan";
}

VulnerabilityReport propagate_labels(std::span<const CloneMatch> matches,
    const LabelStore& labels, double threshold, bool include_scaffold)
{
    VulnerabilityReport report;
    report.threshold = threshold;
    for (const auto& m : matches)
    {
        if (!include_scaffold &&
            (is_scaffold_function(m.query.function) || is_scaffold_function(m.match.function)))
            continue;
        auto evidence = m;
        evidence.tags = labels.tags(m.match.contract_key());
        for (const auto t : evidence.tags)
        {
            const auto i = tag_index(t);
            report.epsilon[i] = std::max(report.epsilon[i], std::clamp(m.similarity, 0.0, 1.0));
            report.evidence[i].push_back(evidence);
        }
    }
    for (auto& ev : report.evidence)
        std::sort(ev.begin(), ev.end(), ranks_before);
    return report;
}
}  // namespace eth2vec

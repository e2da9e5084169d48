// eth2vec: EVM bytecode embeddings for clone and vulnerability detection
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <eth2vec/detection.hpp>

#include <array>
#include <string>
#include <vector>

namespace eth2vec
{
struct EvalOptions
{
    uint32_t folds = 10;
    uint64_t seed = 1;  ///< fold shuffling
    Hyperparams hyper;
    CloneSearch search;
    bool include_scaffold = false;  ///< see propagate_labels
    bool refit = true;              ///< see TrainOptions
    /// Folds evaluated concurrently; each fold still trains single-threaded,
    /// so results do not depend on this value.
    unsigned threads = 1;
};

struct TagMetrics
{
    Tag tag = Tag::Reentrancy;
    uint64_t tp = 0;
    uint64_t fp = 0;
    uint64_t fn = 0;
    uint64_t tn = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double accuracy = 0.0;
};

struct EvalResult
{
    std::array<TagMetrics, tag_count> per_tag;
    TagMetrics macro;  ///< averaged ratios, summed counts
    double stddev_precision = 0.0;
    double stddev_recall = 0.0;
    double stddev_f1 = 0.0;
    /// Ratios whose denominator was zero and were reported as 0.
    size_t undefined_ratios = 0;
    size_t contracts = 0;
    std::vector<std::vector<ContractKey>> folds;  ///< test members of each fold
    double infer_ms_per_contract = 0.0;
};

/// Splits `items` (already in corpus order) into `folds` near-equal groups
/// after a seeded shuffle.
std::vector<std::vector<ContractKey>> make_folds(
    std::vector<ContractKey> items, uint32_t folds, uint64_t seed);

/// Cross-validated detection: per fold, train on the remaining contracts,
/// infer every function of each held-out contract, propagate labels from
/// clones and compare with the held-out contract's own labels.
/// Throws Error when folds < 2 or folds exceeds the number of contracts.
EvalResult evaluate(
    const std::vector<ContractFile>& corpus, const LabelStore& labels, const EvalOptions& options);

/// Fills ratios from counts; returns how many were undefined (0/0).
size_t finalize_metrics(TagMetrics& m);

std::string format_metrics_table(const EvalResult& result);

/// tag,precision,recall,f1,accuracy,tp,fp,fn,tn with one row per tag plus "macro".
std::string format_metrics_csv(const EvalResult& result);
}  // namespace eth2vec

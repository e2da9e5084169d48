// eth2vec: EVM bytecode embeddings for clone and vulnerability detection
// SPDX-License-Identifier: Apache-2.0

#include <eth2vec/evaluation.hpp>
#include <eth2vec/synthetic.hpp>
#include <gtest/gtest.h>
#include <testutils.hpp>

#include <set>

using namespace eth2vec;
using namespace eth2vec::test;

namespace
{
EvalOptions quick(uint32_t folds)
{
    EvalOptions o;
    o.folds = folds;
    o.hyper.dim = 8;
    o.hyper.epochs = 3;
    o.hyper.infer_epochs = 3;
    o.hyper.negatives = 3;
    return o;
}

std::vector<ContractKey> keys(size_t n)
{
    std::vector<ContractKey> out;
    for (size_t i = 0; i < n; ++i)
        out.emplace_back("f" + std::to_string(i), "main");
    return out;
}

size_t lines(const std::string& s)
{
    return static_cast<size_t>(std::count(s.begin(), s.end(), '\n'));
}
}  // namespace

TEST(make_folds, partition_with_near_equal_sizes)
{
    for (const size_t n : {2u, 7u, 10u, 61u})
    {
        for (const uint32_t k : {2u, 3u, 10u})
        {
            if (k > n)
                continue;
            const auto folds = make_folds(keys(n), k, 9);
            ASSERT_EQ(folds.size(), k);
            std::multiset<ContractKey> seen;
            size_t lo = n, hi = 0;
            for (const auto& f : folds)
            {
                seen.insert(f.begin(), f.end());
                lo = std::min(lo, f.size());
                hi = std::max(hi, f.size());
            }
            const auto all = keys(n);
            EXPECT_EQ(seen, std::multiset<ContractKey>(all.begin(), all.end()));
            EXPECT_LE(hi - lo, 1u);
        }
    }
}

TEST(make_folds, seeded)
{
    EXPECT_EQ(make_folds(keys(20), 4, 3), make_folds(keys(20), 4, 3));
    EXPECT_NE(make_folds(keys(20), 4, 3), make_folds(keys(20), 4, 4));
}

TEST(finalize_metrics, ratios_and_undefined)
{
    TagMetrics m;
    m.tp = 3;
    m.fp = 1;
    m.fn = 3;
    m.tn = 3;
    EXPECT_EQ(finalize_metrics(m), 0u);
    EXPECT_DOUBLE_EQ(m.precision, 0.75);
    EXPECT_DOUBLE_EQ(m.recall, 0.5);
    EXPECT_DOUBLE_EQ(m.f1, 0.6);
    EXPECT_DOUBLE_EQ(m.accuracy, 0.6);

    TagMetrics empty;
    empty.tn = 5;
    EXPECT_EQ(finalize_metrics(empty), 3u);  // precision, recall, f1
    EXPECT_EQ(empty.precision, 0.0);
    EXPECT_EQ(empty.accuracy, 1.0);
}

TEST(evaluate, fold_count_is_validated)
{
    const auto corpus = synthetic::vulnerable_corpus(2, 1, 1);
    const auto files = corpus.contract_files();
    EXPECT_THROW(evaluate(files, corpus.labels(), quick(1)), Error);
    EXPECT_THROW(evaluate(files, corpus.labels(), quick(0)), Error);
    EXPECT_THROW(evaluate(files, corpus.labels(), quick(3)), Error);
    EXPECT_NO_THROW(evaluate(files, corpus.labels(), quick(2)));
}

TEST(evaluate, exact_duplicates_are_always_recovered)
{
    // Every contract has a byte-identical twin carrying the same labels, so
    // leave-one-out always keeps the twin in the training side.
    const auto base = synthetic::vulnerable_corpus(4, 1, 11);
    synthetic::LabeledCorpus twins;
    for (const auto& f : base.files)
    {
        twins.files.push_back(f);
        twins.files.push_back({f.name + "_copy", f.code, f.tags});
    }
    const auto files = twins.contract_files();
    auto options = quick(static_cast<uint32_t>(files.size()));
    options.hyper.epochs = 5;
    const auto r = evaluate(files, twins.labels(), options);
    EXPECT_EQ(r.contracts, 8u);
    EXPECT_EQ(r.macro.fn, 0u);
    for (const auto& m : r.per_tag)
    {
        if (m.tp + m.fn > 0)
        {
            EXPECT_EQ(m.recall, 1.0) << tag_name(m.tag);
        }
    }
}

TEST(evaluate, unlabeled_corpus)
{
    const auto corpus = synthetic::vulnerable_corpus(3, 1, 2);
    const auto r = evaluate(corpus.contract_files(), LabelStore{}, quick(3));
    EXPECT_EQ(r.macro.tp, 0u);
    EXPECT_EQ(r.macro.fp, 0u);
    EXPECT_EQ(r.macro.fn, 0u);
    EXPECT_EQ(r.macro.tn, 3u * tag_count);
    EXPECT_EQ(r.macro.precision, 0.0);
    EXPECT_EQ(r.macro.recall, 0.0);
    EXPECT_EQ(r.undefined_ratios, 3u * tag_count);
    EXPECT_NE(format_metrics_table(r).find("zero denominator"), std::string::npos);
}

TEST(evaluate, deterministic_across_thread_counts)
{
    const auto corpus = synthetic::vulnerable_corpus(3, 2, 5);
    const auto files = corpus.contract_files();
    auto options = quick(3);
    const auto a = format_metrics_csv(evaluate(files, corpus.labels(), options));
    options.threads = 3;
    const auto b = evaluate(files, corpus.labels(), options);
    EXPECT_EQ(a, format_metrics_csv(b));
    EXPECT_EQ(b.folds.size(), 3u);
}

TEST(format, csv_and_table_shape)
{
    const auto corpus = synthetic::vulnerable_corpus(2, 1, 3);
    const auto r = evaluate(corpus.contract_files(), corpus.labels(), quick(2));
    const auto csv = format_metrics_csv(r);
    EXPECT_EQ(lines(csv), 1u + tag_count + 1u);
    EXPECT_EQ(csv.rfind("tag,precision,recall,f1,accuracy,tp,fp,fn,tn\n", 0), 0u);
    EXPECT_NE(csv.find("\nmacro,"), std::string::npos);
    EXPECT_NE(csv.find("\nReentrancy,"), std::string::npos);
    const auto table = format_metrics_table(r);
    EXPECT_NE(table.find("average"), std::string::npos);
    EXPECT_NE(table.find("std. deviation"), std::string::npos);
}

// eth2vec: EVM bytecode embeddings for clone and vulnerability detection
// SPDX-License-Identifier: Apache-2.0

#include <eth2vec/evaluation.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

namespace eth2vec
{
namespace
{
double ratio(uint64_t num, uint64_t den, size_t& undefined)
{
    if (den == 0)
    {
        ++undefined;
        return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
}

struct FoldOutcome
{
    std::array<TagMetrics, tag_count> counts{};
    double infer_ms = 0.0;
};

/// Copy of the corpus restricted to the given contracts.
std::vector<ContractFile> restrict_corpus(
    const std::vector<ContractFile>& corpus, const std::set<ContractKey>& keep)
{
    std::vector<ContractFile> out;
    for (const auto& file : corpus)
    {
        ContractFile f{file.name, file.md5, {}};
        for (const auto& c : file.contracts)
        {
            if (keep.contains({file.name, c.name}))
                f.contracts.push_back(c);
        }
        if (!f.contracts.empty())
            out.push_back(std::move(f));
    }
    return out;
}

FoldOutcome run_fold(const std::vector<ContractFile>& corpus, const LabelStore& labels,
    const std::vector<ContractKey>& test, const std::vector<ContractKey>& all,
    const EvalOptions& options)
{
    const std::set<ContractKey> test_set(test.begin(), test.end());
    std::set<ContractKey> train_set;
    for (const auto& k : all)
    {
        if (!test_set.contains(k))
            train_set.insert(k);
    }

    TrainOptions train_options;
    train_options.refit = options.refit;
    const auto trained = train(restrict_corpus(corpus, train_set), options.hyper, train_options);
    const auto& model = trained.model;
    const auto index = VectorIndex::from_model(model);

    FoldOutcome outcome;
    const auto started = std::chrono::steady_clock::now();
    for (const auto& file : corpus)
    {
        for (const auto& contract : file.contracts)
        {
            const ContractKey key{file.name, contract.name};
            if (!test_set.contains(key))
                continue;

            std::vector<CloneMatch> matches;
            for (const auto& function : contract.functions)
            {
                const auto seq = encode(function, model.vocab, model.normalization);
                if (seq.empty())
                    continue;
                const auto theta = infer(seq, model);
                const FunctionId id{file.name, contract.name, function.name};
                auto found = find_clones(id, theta, index, options.search);
                matches.insert(matches.end(), found.begin(), found.end());
            }
            const auto report = propagate_labels(
                matches, labels, options.search.threshold, options.include_scaffold);
            const auto& truth = labels.tags(key);
            for (const auto t : all_tags)
            {
                auto& c = outcome.counts[tag_index(t)];
                const bool predicted = report.predicted(t);
                const bool actual = truth.contains(t);
                c.tp += predicted && actual;
                c.fp += predicted && !actual;
                c.fn += !predicted && actual;
                c.tn += !predicted && !actual;
            }
        }
    }
    outcome.infer_ms = std::chrono::duration<double, std::milli>(
        std::chrono::steady_clock::now() - started)
                           .count();
    return outcome;
}

double stddev(const std::array<TagMetrics, tag_count>& m, double TagMetrics::*field, double mean)
{
    double s = 0.0;
    for (const auto& x : m)
        s += (x.*field - mean) * (x.*field - mean);
    return std::sqrt(s / static_cast<double>(m.size()));
}
}  // namespace

std::vector<std::vector<ContractKey>> make_folds(
    std::vector<ContractKey> items, uint32_t folds, uint64_t seed)
{
    Rng rng{seed};
    rng.shuffle(items);
    std::vector<std::vector<ContractKey>> out(folds);
    const size_t base = items.size() / folds;
    const size_t extra = items.size() % folds;
    size_t pos = 0;
    for (size_t f = 0; f < folds; ++f)
    {
        const size_t n = base + (f < extra ? 1 : 0);
        out[f].assign(items.begin() + static_cast<std::ptrdiff_t>(pos),
            items.begin() + static_cast<std::ptrdiff_t>(pos + n));
        pos += n;
    }
    return out;
}

size_t finalize_metrics(TagMetrics& m)
{
    size_t undefined = 0;
    m.precision = ratio(m.tp, m.tp + m.fp, undefined);
    m.recall = ratio(m.tp, m.tp + m.fn, undefined);
    if (m.precision + m.recall > 0.0)
        m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    else
    {
        m.f1 = 0.0;
        ++undefined;
    }
    m.accuracy = ratio(m.tp + m.tn, m.tp + m.tn + m.fp + m.fn, undefined);
    return undefined;
}

EvalResult evaluate(
    const std::vector<ContractFile>& corpus, const LabelStore& labels, const EvalOptions& options)
{
    std::vector<ContractKey> all;
    for (const auto& file : corpus)
        for (const auto& c : file.contracts)
            all.emplace_back(file.name, c.name);

    if (options.folds < 2)
        throw Error{"cross-validation needs at least 2 folds (got " +
                    std::to_string(options.folds) + "); the training set would be empty"};
    if (options.folds > all.size())
        throw Error{"cannot split " + std::to_string(all.size()) + " contracts into " +
                    std::to_string(options.folds) + " folds"};

    EvalResult result;
    result.contracts = all.size();
    result.folds = make_folds(all, options.folds, options.seed);

    std::vector<FoldOutcome> outcomes(result.folds.size());
    const unsigned workers =
        std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(outcomes.size())));
    if (workers == 1)
    {
        for (size_t f = 0; f < result.folds.size(); ++f)
            outcomes[f] = run_fold(corpus, labels, result.folds[f], all, options);
    }
    else
    {
        std::exception_ptr failure;
        std::mutex mutex;
        size_t next = 0;
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w)
        {
            pool.emplace_back([&] {
                while (true)
                {
                    size_t f;
                    {
                        std::lock_guard lock{mutex};
                        if (failure || next == result.folds.size())
                            return;
                        f = next++;
                    }
                    try
                    {
                        outcomes[f] = run_fold(corpus, labels, result.folds[f], all, options);
                    }
                    catch (...)
                    {
                        std::lock_guard lock{mutex};
                        if (!failure)
                            failure = std::current_exception();
                    }
                }
            });
        }
        for (auto& t : pool)
            t.join();
        if (failure)
            std::rethrow_exception(failure);
    }

    double infer_ms = 0.0;
    for (const auto t : all_tags)
        result.per_tag[tag_index(t)].tag = t;
    for (const auto& o : outcomes)
    {
        infer_ms += o.infer_ms;
        for (size_t i = 0; i < tag_count; ++i)
        {
            result.per_tag[i].tp += o.counts[i].tp;
            result.per_tag[i].fp += o.counts[i].fp;
            result.per_tag[i].fn += o.counts[i].fn;
            result.per_tag[i].tn += o.counts[i].tn;
        }
    }
    result.infer_ms_per_contract = infer_ms / static_cast<double>(all.size());

    auto& macro = result.macro;
    for (auto& m : result.per_tag)
    {
        result.undefined_ratios += finalize_metrics(m);
        macro.tp += m.tp;
        macro.fp += m.fp;
        macro.fn += m.fn;
        macro.tn += m.tn;
        macro.precision += m.precision / tag_count;
        macro.recall += m.recall / tag_count;
        macro.f1 += m.f1 / tag_count;
        macro.accuracy += m.accuracy / tag_count;
    }
    result.stddev_precision = stddev(result.per_tag, &TagMetrics::precision, macro.precision);
    result.stddev_recall = stddev(result.per_tag, &TagMetrics::recall, macro.recall);
    result.stddev_f1 = stddev(result.per_tag, &TagMetrics::f1, macro.f1);
    return result;
}

std::string format_metrics_table(const EvalResult& r)
{
    std::string out;
    char line[160];
    std::snprintf(line, sizeof(line), "%-20s %9s %9s %9s %9s %5s %5s %5s %5s\n", "vulnerability",
        "precision", "recall", "f1", "accuracy", "tp", "fp", "fn", "tn");
    out += line;
    for (const auto& m : r.per_tag)
    {
        std::snprintf(line, sizeof(line), "%-20s %9.3f %9.3f %9.3f %9.3f %5llu %5llu %5llu %5llu\n",
            std::string{tag_name(m.tag)}.c_str(), m.precision, m.recall, m.f1, m.accuracy,
            static_cast<unsigned long long>(m.tp), static_cast<unsigned long long>(m.fp),
            static_cast<unsigned long long>(m.fn), static_cast<unsigned long long>(m.tn));
        out += line;
    }
    std::snprintf(line, sizeof(line), "%-20s %9.3f %9.3f %9.3f %9.3f\n", "average",
        r.macro.precision, r.macro.recall, r.macro.f1, r.macro.accuracy);
    out += line;
    std::snprintf(line, sizeof(line), "%-20s %9.3f %9.3f %9.3f\n", "std. deviation",
        r.stddev_precision, r.stddev_recall, r.stddev_f1);
    out += line;
    if (r.undefined_ratios > 0)
    {
        std::snprintf(line, sizeof(line),
            "* %zu ratio(s) had a zero denominator and are reported as 0\n", r.undefined_ratios);
        out += line;
    }
    return out;
}

std::string format_metrics_csv(const EvalResult& r)
{
    std::string out = "tag,precision,recall,f1,accuracy,tp,fp,fn,tn\n";
    char line[200];
    auto row = [&](std::string_view name, const TagMetrics& m) {
        std::snprintf(line, sizeof(line), "%s,%.6f,%.6f,%.6f,%.6f,%llu,%llu,%llu,%llu\n",
            std::string{name}.c_str(), m.precision, m.recall, m.f1, m.accuracy,
            static_cast<unsigned long long>(m.tp), static_cast<unsigned long long>(m.fp),
            static_cast<unsigned long long>(m.fn), static_cast<unsigned long long>(m.tn));
        out += line;
    };
    for (const auto& m : r.per_tag)
        row(tag_name(m.tag), m);
    row("macro", r.macro);
    return out;
}
}  // namespace eth2vec

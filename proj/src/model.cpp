// eth2vec: EVM bytecode embeddings for clone and vulnerability detection
// SPDX-License-Identifier: Apache-2.0

#include <eth2vec/model.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace eth2vec
{
EncodedSequence encode(const FunctionUnit& function, const Vocabulary& vocab, Normalization policy)
{
    EncodedSequence seq;
    for (const auto& block : function.blocks)
    {
        for (const auto& in : block.instructions)
        {
            const auto t = tokenize(in, policy);
            EncodedInstruction e;
            e.operation = vocab.id(t.operation);
            for (const auto& a : t.operands)
                e.operands.push_back(vocab.id(a));
            seq.push_back(std::move(e));
        }
    }
    return seq;
}

std::vector<TrainingUnit> training_units(
    const std::vector<ContractFile>& corpus, const Vocabulary& vocab, Normalization policy)
{
    std::vector<TrainingUnit> units;
    for (const auto& file : corpus)
        for (const auto& contract : file.contracts)
            for (const auto& function : contract.functions)
            {
                auto seq = encode(function, vocab, policy);
                if (seq.empty())
                    continue;
                units.push_back({{file.name, contract.name, function.name}, std::move(seq)});
            }
    return units;
}

void draw_negatives(
    TokenId target, uint32_t k, const Vocabulary& vocab, Rng& rng, std::vector<TokenId>& out)
{
    out.clear();
    if (vocab.noise_probability(target) >= 1.0 - 1e-12)
        return;
    while (out.size() < k)
    {
        const auto t = vocab.sample(rng);
        if (t != target)
            out.push_back(t);
    }
}

namespace
{
size_t token_count(const EncodedSequence& seq)
{
    size_t n = 0;
    for (const auto& in : seq)
        n += 1 + in.operands.size();
    return n;
}

float learning_rate(float alpha, uint64_t processed, uint64_t total)
{
    const double progress = total == 0 ? 0.0 : std::min(1.0, double(processed) / double(total));
    return static_cast<float>(alpha * (1.0 - 0.99 * progress));
}

/// Per-thread scratch buffers for one SGD step.
struct Scratch
{
    explicit Scratch(size_t dim) : context(2 * dim), context_grad(2 * dim) {}

    std::vector<float> context;
    std::vector<float> context_grad;
    std::vector<TokenId> negatives;
    std::vector<std::pair<TokenId, float>> coeffs;
};

/// Mutable views of the token tables; null during inference.
struct TokenUpdates
{
    float* input = nullptr;
    float* output = nullptr;
};

/// Runs the instruction loop over one sequence, always updating theta and
/// updating the token tables only when `updates` is non-null. Returns the
/// summed loss.
double run_sequence(const EncodedSequence& seq, std::span<float> theta, const Model& model,
    TokenUpdates updates, Rng& rng, Scratch& s, std::atomic<uint64_t>& processed, uint64_t total,
    const FunctionId* id)
{
    const auto d = model.dim();
    const auto tables = model.tables();
    const auto k = model.hyper.negatives;
    double loss_sum = 0.0;

    for (size_t j = 0; j < seq.size(); ++j)
    {
        const auto& in = seq[j];
        pvdm::delta<float>(j, seq, theta, tables, s.context);
        std::fill(s.context_grad.begin(), s.context_grad.end(), 0.0f);
        s.coeffs.clear();

        double loss = 0.0;
        auto step = [&](TokenId target) {
            draw_negatives(target, k, model.vocab, rng, s.negatives);
            loss += pvdm::negative_sampling_loss<float>(
                target, s.negatives, s.context, tables, s.context_grad, s.coeffs);
        };
        step(in.operation);
        for (const auto a : in.operands)
            step(a);

        const auto done = processed.fetch_add(1 + in.operands.size(), std::memory_order_relaxed);
        if (!std::isfinite(loss))
        {
            throw TrainingError{"non-finite loss at step " + std::to_string(done) +
                                " (instruction " + std::to_string(j) + " of function " +
                                (id ? id->str() : std::string{"<query>"}) + ")"};
        }
        loss_sum += loss;

        const float lr = learning_rate(model.hyper.alpha, done, total);
        if (updates.input)
        {
            for (const auto& [t, c] : s.coeffs)
            {
                float* out = updates.output + size_t{t} * 2 * d;
                for (size_t i = 0; i < 2 * d; ++i)
                    out[i] -= lr * c * s.context[i];
            }
            pvdm::backprop_neighbours<float>(j, seq, s.context_grad, d,
                [&](TokenId t, std::span<const float> dir, float scale) {
                    float* v = updates.input + size_t{t} * d;
                    for (size_t i = 0; i < d; ++i)
                        v[i] -= lr * scale * dir[i];
                });
        }
        for (size_t i = 0; i < 2 * d; ++i)
            theta[i] -= lr * s.context_grad[i] / 3.0f;
    }
    return loss_sum;
}

void initialize(Model& model, size_t units, Rng& rng)
{
    const auto d = model.dim();
    const auto v = model.vocab.size();
    const double bound = 0.5 / static_cast<double>(d);
    model.input.resize(v * d);
    for (auto& x : model.input)
        x = static_cast<float>(rng.uniform(-bound, bound));
    model.output.assign(v * 2 * d, 0.0f);
    model.theta.assign(units * 2 * d, 0.0f);
}
}  // namespace

TrainResult train(
    const std::vector<ContractFile>& corpus, const Hyperparams& hyper, const TrainOptions& options)
{
    auto vocab = Vocabulary::build(count_tokens(corpus, default_normalization), hyper.min_count);
    auto units = training_units(corpus, vocab, default_normalization);
    return train(std::move(units), std::move(vocab), hyper, options);
}

TrainResult train(std::vector<TrainingUnit> units, Vocabulary vocab, const Hyperparams& hyper,
    const TrainOptions& options)
{
    if (units.empty())
        throw Error{"cannot train on an empty corpus"};
    if (hyper.dim == 0)
        throw Error{"dimension must be at least 1"};

    TrainResult result;
    Model& model = result.model;
    model.hyper = hyper;
    model.vocab = std::move(vocab);
    for (const auto& u : units)
        model.functions.push_back(u.id);

    Rng rng{hyper.seed};
    initialize(model, units.size(), rng);

    uint64_t tokens_per_epoch = 0;
    for (const auto& u : units)
        tokens_per_epoch += token_count(u.sequence);
    const uint64_t total = tokens_per_epoch * hyper.epochs;
    std::atomic<uint64_t> processed{0};

    const auto fdim = model.function_dim();
    auto theta_of = [&](size_t i) { return std::span<float>{model.theta}.subspan(i * fdim, fdim); };

    const unsigned threads =
        std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(units.size())));
    const TokenUpdates updates{model.input.data(), model.output.data()};
    std::vector<Rng> rngs;
    rngs.push_back(rng);
    for (unsigned t = 1; t < threads; ++t)
        rngs.emplace_back(hyper.seed + 0x9e3779b97f4a7c15ull * t);

    for (uint32_t epoch = 0; epoch < hyper.epochs; ++epoch)
    {
        double epoch_loss = 0.0;
        if (threads == 1)
        {
            Scratch scratch{model.dim()};
            for (size_t i = 0; i < units.size(); ++i)
                epoch_loss += run_sequence(units[i].sequence, theta_of(i), model, updates, rngs[0],
                    scratch, processed, total, &units[i].id);
        }
        else
        {
            // Asynchronous SGD: workers own disjoint function ranges but share
            // token tables without synchronization.
            std::vector<double> partial(threads, 0.0);
            std::exception_ptr failure;
            std::mutex failure_mutex;
            std::vector<std::thread> pool;
            const size_t chunk = (units.size() + threads - 1) / threads;
            for (unsigned t = 0; t < threads; ++t)
            {
                pool.emplace_back([&, t] {
                    try
                    {
                        Scratch scratch{model.dim()};
                        const size_t begin = t * chunk;
                        const size_t end = std::min(units.size(), begin + chunk);
                        for (size_t i = begin; i < end; ++i)
                            partial[t] += run_sequence(units[i].sequence, theta_of(i), model, updates,
                                rngs[t], scratch, processed, total, &units[i].id);
                    }
                    catch (...)
                    {
                        std::lock_guard lock{failure_mutex};
                        if (!failure)
                            failure = std::current_exception();
                    }
                });
            }
            for (auto& th : pool)
                th.join();
            if (failure)
                std::rethrow_exception(failure);
            for (const auto p : partial)
                epoch_loss += p;
        }

        const double mean = tokens_per_epoch ? epoch_loss / double(tokens_per_epoch) : 0.0;
        result.epoch_loss.push_back(mean);
        if (options.on_epoch)
            options.on_epoch(epoch, mean);
    }

    if (options.refit)
    {
        for (size_t i = 0; i < units.size(); ++i)
        {
            if (units[i].sequence.empty())
                continue;
            const auto v = infer(units[i].sequence, model);
            std::copy(v.begin(), v.end(), theta_of(i).begin());
        }
    }
    return result;
}

std::vector<float> infer(const EncodedSequence& query, const Model& model)
{
    if (query.empty())
        throw Error{"cannot infer a vector for a function with no instructions"};

    std::vector<float> theta(model.function_dim(), 0.0f);
    Rng rng{model.hyper.seed};
    Scratch scratch{model.dim()};
    const uint64_t total = token_count(query) * model.hyper.infer_epochs;
    std::atomic<uint64_t> processed{0};

    for (uint32_t epoch = 0; epoch < model.hyper.infer_epochs; ++epoch)
        run_sequence(query, theta, model, {}, rng, scratch, processed, total, nullptr);
    return theta;
}

std::vector<float> infer(const FunctionUnit& query, const Model& model)
{
    return infer(encode(query, model.vocab, model.normalization), model);
}
}  // namespace eth2vec

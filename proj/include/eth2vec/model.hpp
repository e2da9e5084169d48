// eth2vec: EVM bytecode embeddings for clone and vulnerability detection
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <eth2vec/extractor.hpp>
#include <eth2vec/labels.hpp>
#include <eth2vec/pvdm.hpp>
#include <eth2vec/random.hpp>
#include <eth2vec/vocabulary.hpp>

#include <compare>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace eth2vec
{
/// Identity of a function within a corpus.
struct FunctionId
{
    std::string file;
    std::string contract;
    std::string function;

    ContractKey contract_key() const { return {file, contract}; }

    /// "file/contract/function"
    std::string str() const { return file + "/" + contract + "/" + function; }

    auto operator<=>(const FunctionId&) const = default;
    bool operator==(const FunctionId&) const = default;
};

struct TrainingUnit
{
    FunctionId id;
    EncodedSequence sequence;
};

struct Hyperparams
{
    uint32_t dim = 100;        ///< d; function vectors have 2d entries
    uint32_t negatives = 25;   ///< k
    float alpha = 0.025f;      ///< initial learning rate, decayed linearly to alpha/100
    uint32_t epochs = 10;
    uint32_t infer_epochs = 10;
    uint32_t min_count = 1;
    uint64_t seed = 1;

    bool operator==(const Hyperparams&) const = default;
};

/// Trained parameters: token tables, function vectors and the vocabulary.
struct Model
{
    Hyperparams hyper;
    Normalization normalization = default_normalization;
    Vocabulary vocab;
    std::vector<float> input;   ///< vocab x d
    std::vector<float> output;  ///< vocab x 2d
    std::vector<FunctionId> functions;
    std::vector<float> theta;   ///< functions x 2d

    size_t dim() const noexcept { return hyper.dim; }
    size_t function_dim() const noexcept { return 2 * size_t{hyper.dim}; }

    std::span<const float> function_vector(size_t i) const
    {
        return std::span<const float>{theta}.subspan(i * function_dim(), function_dim());
    }

    pvdm::TokenTables<float> tables() const { return {dim(), input, output}; }

    bool operator==(const Model&) const = default;
};

class TrainingError : public Error
{
public:
    using Error::Error;
};

EncodedSequence encode(
    const FunctionUnit& function, const Vocabulary& vocab, Normalization policy);

/// One unit per function of every contract, in corpus order.
std::vector<TrainingUnit> training_units(
    const std::vector<ContractFile>& corpus, const Vocabulary& vocab, Normalization policy);

/// k draws from the noise distribution, redrawing any draw equal to the
/// target. No negatives are drawn when the target carries all the noise mass.
void draw_negatives(TokenId target, uint32_t k, const Vocabulary& vocab, Rng& rng,
    std::vector<TokenId>& out);

/// One negative-sampling step at position j: draws k negatives and returns
/// the loss with its exact gradients.
template <typename Real>
pvdm::StepGradients<Real> neg_sample_step(TokenId target, size_t j, const EncodedSequence& seq,
    std::span<const Real> theta, const pvdm::TokenTables<Real>& tables, uint32_t k,
    const Vocabulary& vocab, Rng& rng)
{
    std::vector<TokenId> negatives;
    draw_negatives(target, k, vocab, rng, negatives);
    return pvdm::loss_and_gradients<Real>(target, negatives, j, seq, theta, tables);
}

struct TrainOptions
{
    /// 1 = deterministic. More threads run asynchronous SGD over disjoint
    /// function partitions with unsynchronized updates; results then vary
    /// between runs.
    unsigned threads = 1;
    /// Replace each trained function vector with infer() of its own sequence
    /// against the final tables, so an identical query reproduces it exactly.
    bool refit = false;
    std::function<void(uint32_t epoch, double mean_loss)> on_epoch;
};

struct TrainResult
{
    Model model;
    std::vector<double> epoch_loss;  ///< mean loss per token, one entry per epoch
};

/// Builds the vocabulary from the corpus and trains. Throws Error on an empty
/// corpus and TrainingError on a non-finite loss.
TrainResult train(const std::vector<ContractFile>& corpus, const Hyperparams& hyper,
    const TrainOptions& options = {});

TrainResult train(std::vector<TrainingUnit> units, Vocabulary vocab, const Hyperparams& hyper,
    const TrainOptions& options = {});

/// Learns a vector for an unseen function with every token vector frozen.
/// Runs `hyper.infer_epochs` epochs from a zero vector, seeded by `hyper.seed`.
std::vector<float> infer(const EncodedSequence& query, const Model& model);

std::vector<float> infer(const FunctionUnit& query, const Model& model);
}  // namespace eth2vec

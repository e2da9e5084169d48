// eth2vec: EVM bytecode embeddings for clone and vulnerability detection
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Scalar-generic building blocks of the distributed-memory objective:
// the instruction embedding CT, the joint context delta, the k-negative
// sampling loss and its gradients. Training instantiates them with float;
// gradient checking instantiates them with double.

#include <eth2vec/vocabulary.hpp>

#include <cassert>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

namespace eth2vec
{
struct EncodedInstruction
{
    TokenId operation = 0;
    std::vector<TokenId> operands;

    bool operator==(const EncodedInstruction&) const = default;
};

/// Flat instruction sequence of one function (its blocks in schema order).
using EncodedSequence = std::vector<EncodedInstruction>;

namespace pvdm
{
template <typename Real>
Real sigmoid(Real x) noexcept
{
    if (x >= 0)
        return Real{1} / (Real{1} + std::exp(-x));
    const Real e = std::exp(x);
    return e / (Real{1} + e);
}

/// log(sigmoid(x)) without overflow for large |x|.
template <typename Real>
Real log_sigmoid(Real x) noexcept
{
    if (x >= 0)
        return -std::log1p(std::exp(-x));
    return x - std::log1p(std::exp(x));
}

template <typename Real>
Real dot(std::span<const Real> a, std::span<const Real> b) noexcept
{
    assert(a.size() == b.size());
    Real s{0};
    for (size_t i = 0; i < a.size(); ++i)
        s += a[i] * b[i];
    return s;
}

/// Read-only view of the token tables: `input` holds the d-dimensional token
/// vectors, `output` the 2d-dimensional prediction-side vectors.
template <typename Real>
struct TokenTables
{
    size_t dim = 0;
    std::span<const Real> input;
    std::span<const Real> output;

    std::span<const Real> in(TokenId t) const { return input.subspan(size_t{t} * dim, dim); }
    std::span<const Real> out(TokenId t) const
    {
        return output.subspan(size_t{t} * 2 * dim, 2 * dim);
    }
};

/// Adds `scale * CT(in)` to `acc` (length 2d). CT is the operation vector
/// followed by the mean of the operand vectors (zero when there are none).
template <typename Real>
void add_ct(const EncodedInstruction& in, const TokenTables<Real>& tables, Real scale,
    std::span<Real> acc) noexcept
{
    const auto d = tables.dim;
    const auto op = tables.in(in.operation);
    for (size_t i = 0; i < d; ++i)
        acc[i] += scale * op[i];
    if (in.operands.empty())
        return;
    const Real share = scale / static_cast<Real>(in.operands.size());
    for (const auto a : in.operands)
    {
        const auto v = tables.in(a);
        for (size_t i = 0; i < d; ++i)
            acc[d + i] += share * v[i];
    }
}

template <typename Real>
std::vector<Real> ct(const EncodedInstruction& in, const TokenTables<Real>& tables)
{
    std::vector<Real> out(2 * tables.dim, Real{0});
    add_ct(in, tables, Real{1}, std::span<Real>{out});
    return out;
}

/// delta(j) = (theta + CT(in[j-1]) + CT(in[j+1])) / 3 with a missing
/// neighbour contributing zero; the divisor is always 3.
template <typename Real>
void delta(size_t j, const EncodedSequence& seq, std::span<const Real> theta,
    const TokenTables<Real>& tables, std::span<Real> out) noexcept
{
    constexpr Real third = Real{1} / Real{3};
    for (size_t i = 0; i < out.size(); ++i)
        out[i] = third * theta[i];
    if (j > 0)
        add_ct(seq[j - 1], tables, third, out);
    if (j + 1 < seq.size())
        add_ct(seq[j + 1], tables, third, out);
}

template <typename Real>
std::vector<Real> delta(size_t j, const EncodedSequence& seq, std::span<const Real> theta,
    const TokenTables<Real>& tables)
{
    std::vector<Real> out(2 * tables.dim);
    delta(j, seq, theta, tables, std::span<Real>{out});
    return out;
}

/// Loss -[log s(X_target) + sum_d log s(-X_d)] with X_t = out(t) . delta.
///
/// Accumulates dL/d(delta) into `context_grad` and appends (t, c) pairs to
/// `output_coeffs` such that dL/d(out(t)) = c * delta.
template <typename Real>
Real negative_sampling_loss(TokenId target, std::span<const TokenId> negatives,
    std::span<const Real> context, const TokenTables<Real>& tables,
    std::span<Real> context_grad, std::vector<std::pair<TokenId, Real>>& output_coeffs)
{
    Real loss{0};
    auto score = [&](TokenId t, bool positive) {
        const auto v = tables.out(t);
        const Real x = dot(v, context);
        loss -= positive ? log_sigmoid(x) : log_sigmoid(-x);
        const Real coeff = sigmoid(x) - (positive ? Real{1} : Real{0});
        for (size_t i = 0; i < context_grad.size(); ++i)
            context_grad[i] += coeff * v[i];
        output_coeffs.emplace_back(t, coeff);
    };
    score(target, true);
    for (const auto t : negatives)
        score(t, false);
    return loss;
}

/// Distributes dL/d(delta) onto the neighbour token vectors:
/// each operation vector receives g[0:d]/3 and each operand vector
/// g[d:2d]/(3|A|). `apply(token, direction, scale)` is called per token
/// occurrence with a d-length direction.
template <typename Real, typename Apply>
void backprop_neighbours(size_t j, const EncodedSequence& seq, std::span<const Real> context_grad,
    size_t dim, Apply&& apply)
{
    const auto op_dir = context_grad.first(dim);
    const auto arg_dir = context_grad.subspan(dim, dim);
    auto one = [&](const EncodedInstruction& in) {
        apply(in.operation, op_dir, Real{1} / Real{3});
        if (in.operands.empty())
            return;
        const Real share = Real{1} / (Real{3} * static_cast<Real>(in.operands.size()));
        for (const auto a : in.operands)
            apply(a, arg_dir, share);
    };
    if (j > 0)
        one(seq[j - 1]);
    if (j + 1 < seq.size())
        one(seq[j + 1]);
}

/// Dense loss gradients of a single (target, negatives) step.
template <typename Real>
struct StepGradients
{
    Real loss{0};
    std::vector<Real> theta;   ///< 2d
    std::vector<Real> input;   ///< vocab x d
    std::vector<Real> output;  ///< vocab x 2d
};

/// Exact loss and gradients with respect to theta and both token tables for
/// the instruction at position j, with the negatives fixed by the caller.
template <typename Real>
StepGradients<Real> loss_and_gradients(TokenId target, std::span<const TokenId> negatives,
    size_t j, const EncodedSequence& seq, std::span<const Real> theta,
    const TokenTables<Real>& tables)
{
    const auto d = tables.dim;
    const auto vocab = tables.input.size() / d;
    StepGradients<Real> g;
    g.theta.assign(2 * d, Real{0});
    g.input.assign(vocab * d, Real{0});
    g.output.assign(vocab * 2 * d, Real{0});

    const auto context = delta(j, seq, theta, tables);
    std::vector<Real> context_grad(2 * d, Real{0});
    std::vector<std::pair<TokenId, Real>> coeffs;
    g.loss = negative_sampling_loss<Real>(target, negatives, context, tables,
        std::span<Real>{context_grad}, coeffs);

    for (const auto& [t, c] : coeffs)
        for (size_t i = 0; i < 2 * d; ++i)
            g.output[size_t{t} * 2 * d + i] += c * context[i];
    for (size_t i = 0; i < 2 * d; ++i)
        g.theta[i] = context_grad[i] / Real{3};
    backprop_neighbours<Real>(j, seq, context_grad, d,
        [&](TokenId t, std::span<const Real> dir, Real scale) {
            for (size_t i = 0; i < d; ++i)
                g.input[size_t{t} * d + i] += scale * dir[i];
        });
    return g;
}
}  // namespace pvdm
}  // namespace eth2vec

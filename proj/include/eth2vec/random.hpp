// eth2vec: EVM bytecode embeddings for clone and vulnerability detection
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>

namespace eth2vec
{
/// Seeded generator with distributions defined here rather than by the
/// standard library, whose distribution algorithms are implementation-defined.
/// Identical seeds give identical streams on every platform.
class Rng
{
public:
    explicit Rng(uint64_t seed) : engine_{seed} {}

    uint64_t next() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n); n must be positive.
    uint64_t below(uint64_t n)
    {
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t x;
        do
            x = next();
        while (x >= limit);
        return x % n;
    }

    template <typename Vec>
    void shuffle(Vec& v)
    {
        for (size_t i = v.size(); i > 1; --i)
        {
            const auto j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};
}  // namespace eth2vec

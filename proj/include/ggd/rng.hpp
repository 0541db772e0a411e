// Copyright (c) 2026 ggd contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace ggd {

// splitmix64: tiny, well mixed, reproducible across platforms. All
// randomness in the library flows through this so outputs never depend
// on the standard library's distribution implementations.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t s = a ^ (0x9e3779b97f4a7c15ULL + (b << 6) + (b >> 2));
    std::uint64_t t = s;
    return splitmix64(t);
}

/// Named sub-seed derivation: one top-level seed fans out to independent
/// streams, so changing e.g. the shuffle seed leaves data generation alone.
inline std::uint64_t sub_seed(std::uint64_t top, std::string_view tag) {
    std::uint64_t h = 0xcbf29ce484222325ULL; // FNV-1a
    for (char c : tag) {
        h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
        h *= 0x100000001b3ULL;
    }
    return mix_seed(top, h);
}

/// Deterministic random stream. Constructed from (seed) or (seed, index)
/// for counter-based per-sample streams that are order independent.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {
        // decorrelate trivially close seeds
        splitmix64(state_);
    }
    Rng(std::uint64_t seed, std::uint64_t index) : Rng(mix_seed(seed, index)) {}

    std::uint64_t next_u64() { return splitmix64(state_); }

    /// Uniform double in [0,1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    std::uint64_t uniform_int(std::uint64_t n) {
        // modulo bias is < 2^-40 for the n used here (n <= a few thousand)
        return next_u64() % n;
    }

    /// Standard normal via Box-Muller (no state caching, two draws each).
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    /// In-place Fisher-Yates. Deterministic across platforms, unlike
    /// std::shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_int(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
};

} // namespace ggd

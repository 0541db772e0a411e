// Copyright (c) 2026 ggd contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "ggd/data.hpp"
#include "ggd/rng.hpp"

namespace ggd {

using Palette = std::array<std::array<double, 3>, 10>;

/// Ten well-separated background colors. A config item, not a constant:
/// callers may substitute any 10 distinct RGB triples.
inline Palette default_palette() {
    return Palette{{{1.00, 0.10, 0.10},
                    {0.10, 1.00, 0.10},
                    {0.15, 0.15, 1.00},
                    {1.00, 1.00, 0.10},
                    {1.00, 0.10, 1.00},
                    {0.10, 1.00, 1.00},
                    {1.00, 0.55, 0.10},
                    {0.55, 0.10, 1.00},
                    {0.10, 0.55, 0.35},
                    {0.60, 0.30, 0.10}}};
}

// Pixels at or above this source intensity are digit strokes and keep
// their grayscale value on all three channels; everything below becomes
// the background color. The bias is purely a background property.
inline constexpr double kForegroundThreshold = 0.5;

/// Assigns each sample a background color: the class color with
/// probability rho, otherwise one of the other nine uniformly. The chosen
/// color index is recorded as the bias attribute. Pure function of
/// (raw, rho, palette, seed); per-sample streams make the result
/// independent of generation order.
inline BiasedDataset colorize(const RawDataset& raw, double rho, const Palette& palette,
                              std::uint64_t seed) {
    raw.validate();
    if (rho < 0.0 || rho > 1.0) throw ContractError("colorize: rho must be in [0,1]");
    if (raw.num_classes != 10)
        throw ContractError("colorize: palette covers exactly 10 classes");
    for (std::size_t a = 0; a < palette.size(); ++a)
        for (std::size_t b = a + 1; b < palette.size(); ++b)
            if (palette[a] == palette[b])
                throw ContractError("colorize: palette colors must be distinct");

    const std::size_t n = raw.size(), h = raw.images.dim(2), w = raw.images.dim(3);
    const std::size_t plane = h * w;
    BiasedDataset out;
    out.images = Tensor({n, 3, h, w});
    out.labels = raw.labels;
    out.bias_attr.resize(n);
    out.rho = rho;
    out.seed = seed;
    out.num_classes = raw.num_classes;

    for (std::size_t i = 0; i < n; ++i) {
        Rng rng(seed, i);
        const int label = raw.labels[i];
        int color = label;
        if (rng.uniform() >= rho) {
            const int k = static_cast<int>(rng.uniform_int(9));
            color = k >= label ? k + 1 : k;
        }
        out.bias_attr[i] = color;
        const double* src = raw.images.data.data() + i * plane;
        double* dst = out.images.data.data() + i * 3 * plane;
        const auto& rgb = palette[static_cast<std::size_t>(color)];
        for (std::size_t p = 0; p < plane; ++p) {
            const double v = src[p];
            if (v >= kForegroundThreshold) {
                dst[p] = v;
                dst[plane + p] = v;
                dst[2 * plane + p] = v;
            } else {
                dst[p] = rgb[0];
                dst[plane + p] = rgb[1];
                dst[2 * plane + p] = rgb[2];
            }
        }
    }
    return out;
}

/// Exponential class-count profile for long-tailed subsampling:
/// class c keeps round(head_count * mu^(c/(C-1))) samples.
struct LongTailSpec {
    double mu = 1.0;       // imbalance factor, tail count over head count
    int head_count = 1000; // samples kept for class 0

    void validate(int num_classes) const {
        if (mu <= 0.0 || mu > 1.0) throw ContractError("LongTailSpec: mu must be in (0,1]");
        if (head_count < num_classes)
            throw ContractError("LongTailSpec: head_count must be at least the class count");
    }
};

inline std::size_t long_tail_count(const LongTailSpec& spec, int c, int num_classes) {
    const double expo =
        num_classes > 1 ? static_cast<double>(c) / static_cast<double>(num_classes - 1) : 0.0;
    return static_cast<std::size_t>(
        std::llround(static_cast<double>(spec.head_count) * std::pow(spec.mu, expo)));
}

/// Subsamples the raw data to the long-tailed profile, drawing without
/// replacement under the seed. Images pass through unchanged, replicated
/// to three channels; the group (bias attribute) is the class itself.
inline BiasedDataset make_long_tailed(const RawDataset& raw, const LongTailSpec& spec,
                                      std::uint64_t seed) {
    raw.validate();
    spec.validate(raw.num_classes);
    const int C = raw.num_classes;
    std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(C));
    for (std::size_t i = 0; i < raw.size(); ++i)
        by_class[static_cast<std::size_t>(raw.labels[i])].push_back(i);

    std::vector<std::size_t> kept;
    for (int c = 0; c < C; ++c) {
        const std::size_t want = long_tail_count(spec, c, C);
        auto& pool = by_class[static_cast<std::size_t>(c)];
        if (pool.size() < want)
            throw DataError("make_long_tailed: class " + std::to_string(c) + " has " +
                            std::to_string(pool.size()) + " samples, needs " +
                            std::to_string(want));
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(c)));
        rng.shuffle(pool);
        pool.resize(want);
        std::sort(pool.begin(), pool.end());
        kept.insert(kept.end(), pool.begin(), pool.end());
    }

    const std::size_t h = raw.images.dim(2), w = raw.images.dim(3), plane = h * w;
    BiasedDataset out;
    out.images = Tensor({kept.size(), 3, h, w});
    out.labels.reserve(kept.size());
    out.bias_attr.reserve(kept.size());
    out.rho = 1.0; // group always equals the class
    out.seed = seed;
    out.num_classes = C;
    for (std::size_t k = 0; k < kept.size(); ++k) {
        const double* src = raw.images.data.data() + kept[k] * plane;
        double* dst = out.images.data.data() + k * 3 * plane;
        for (std::size_t p = 0; p < plane; ++p)
            dst[p] = dst[plane + p] = dst[2 * plane + p] = src[p];
        out.labels.push_back(raw.labels[kept[k]]);
        out.bias_attr.push_back(raw.labels[kept[k]]);
    }
    return out;
}

namespace detail {

// Class means for the synthetic generator. Fixed given (C, d_core) and
// independent of the dataset seed, so train and test splits drawn with
// different seeds share one distribution.
inline std::vector<double> synthetic_class_mean(int c, int d_core) {
    Rng rng(0x5e1ec7edULL + static_cast<std::uint64_t>(c));
    std::vector<double> m(static_cast<std::size_t>(d_core));
    double norm = 0.0;
    for (double& v : m) {
        v = rng.normal();
        norm += v * v;
    }
    norm = std::sqrt(norm);
    const double scale = 6.0; // pairwise separation of several sigma
    for (double& v : m) v = v / norm * scale;
    return m;
}

} // namespace detail

/// Flat-vector stand-in dataset: core features from class-conditional
/// unit-variance Gaussians with distinct means, plus a noiseless block
/// encoding the bias attribute (one-hot when d_bias >= C, otherwise a
/// binary +/-1 code). Image shape is (1,1,d_core+d_bias) per sample.
inline BiasedDataset synthetic_spurious(std::size_t n, int d_core, int d_bias, double rho,
                                        int C, std::uint64_t seed) {
    if (n == 0 || d_core <= 0 || d_bias <= 0 || C <= 1)
        throw ContractError("synthetic_spurious: n, d_core, d_bias positive and C > 1");
    if (rho < 0.0 || rho > 1.0) throw ContractError("synthetic_spurious: rho must be in [0,1]");
    if (d_bias < C && (1LL << d_bias) < C)
        throw ContractError("synthetic_spurious: d_bias too small to encode " +
                            std::to_string(C) + " classes");

    std::vector<std::vector<double>> means(static_cast<std::size_t>(C));
    for (int c = 0; c < C; ++c) means[static_cast<std::size_t>(c)] = detail::synthetic_class_mean(c, d_core);

    const std::size_t D = static_cast<std::size_t>(d_core + d_bias);
    BiasedDataset out;
    out.images = Tensor({n, 1, 1, D});
    out.labels.resize(n);
    out.bias_attr.resize(n);
    out.rho = rho;
    out.seed = seed;
    out.num_classes = C;

    for (std::size_t i = 0; i < n; ++i) {
        Rng rng(seed, i);
        const int label = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(C)));
        int attr = label;
        if (rng.uniform() >= rho) {
            const int k = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(C - 1)));
            attr = k >= label ? k + 1 : k;
        }
        out.labels[i] = label;
        out.bias_attr[i] = attr;
        double* row = out.images.data.data() + i * D;
        const auto& mu = means[static_cast<std::size_t>(label)];
        for (int j = 0; j < d_core; ++j) row[j] = mu[static_cast<std::size_t>(j)] + rng.normal();
        if (d_bias >= C) {
            for (int j = 0; j < d_bias; ++j) row[d_core + j] = 0.0;
            row[d_core + attr] = 3.0;
        } else {
            for (int j = 0; j < d_bias; ++j)
                row[d_core + j] = ((attr >> j) & 1) ? 3.0 : -3.0;
        }
    }
    return out;
}

} // namespace ggd

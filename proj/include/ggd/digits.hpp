// Copyright (c) 2026 ggd contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>

#include "ggd/data.hpp"
#include "ggd/rng.hpp"

namespace ggd {

/// Procedural seven-segment digit renderer. This is the offline stand-in
/// for a scanned-digit corpus: glyph shape is the core feature, position
/// jitter and pixel noise supply within-class variation. Strokes render
/// well above the 0.5 foreground threshold used by the colorizer, the
/// background stays below it.
struct DigitRenderOptions {
    std::size_t canvas = 14;  // square canvas side
    int jitter_x = 2;         // max absolute horizontal offset
    int jitter_y = 2;         // max absolute vertical offset
    double noise = 0.22;      // background noise amplitude (< 0.5)
    double stroke_lo = 0.62;  // per-pixel stroke intensity range
    double stroke_hi = 1.0;
};

namespace detail {

// segment ids: 0 top, 1 top-left, 2 top-right, 3 middle, 4 bottom-left,
// 5 bottom-right, 6 bottom
inline constexpr std::array<std::uint8_t, 10> kSegmentMask = {
    0b1110111, // 0
    0b0100100, // 1
    0b1011101, // 2
    0b1101101, // 3
    0b0101110, // 4
    0b1101011, // 5
    0b1111011, // 6
    0b0100101, // 7
    0b1111111, // 8
    0b1101111, // 9
};

inline bool has_segment(int digit, int seg) {
    return (kSegmentMask[static_cast<std::size_t>(digit)] >> seg) & 1u;
}

} // namespace detail

/// Draws one digit glyph (6 wide, 10 tall) onto a canvas at the given
/// offset. Stroke pixels get intensities from [stroke_lo, stroke_hi].
inline void draw_glyph(double* canvas, std::size_t side, int digit, int ox, int oy,
                       Rng& rng, const DigitRenderOptions& opt) {
    auto put = [&](int x, int y) {
        if (x < 0 || y < 0 || x >= static_cast<int>(side) || y >= static_cast<int>(side)) return;
        canvas[static_cast<std::size_t>(y) * side + static_cast<std::size_t>(x)] =
            rng.uniform(opt.stroke_lo, opt.stroke_hi);
    };
    // glyph box: x in [0,5], y in [0,9]; horizontal bars at y 0/4/9 (segments
    // 0/3/6), verticals on x 0/5 split at the middle bar
    for (int x = 1; x <= 4; ++x) {
        if (detail::has_segment(digit, 0)) put(ox + x, oy + 0);
        if (detail::has_segment(digit, 3)) put(ox + x, oy + 4);
        if (detail::has_segment(digit, 6)) put(ox + x, oy + 9);
    }
    for (int y = 1; y <= 4; ++y) {
        if (detail::has_segment(digit, 1)) put(ox + 0, oy + y);
        if (detail::has_segment(digit, 2)) put(ox + 5, oy + y);
    }
    for (int y = 5; y <= 8; ++y) {
        if (detail::has_segment(digit, 4)) put(ox + 0, oy + y);
        if (detail::has_segment(digit, 5)) put(ox + 5, oy + y);
    }
}

/// Renders n digit images with uniform random labels. Per-sample
/// randomness is a pure function of (seed, index), so identical calls
/// agree bitwise and samples may be generated in any order.
inline RawDataset render_digits(std::size_t n, std::uint64_t seed,
                                const DigitRenderOptions& opt = {}) {
    if (n == 0) throw ContractError("render_digits: n must be positive");
    if (opt.canvas < 12) throw ContractError("render_digits: canvas must fit a 6x10 glyph");
    RawDataset d;
    d.num_classes = 10;
    d.images = Tensor({n, 1, opt.canvas, opt.canvas});
    d.labels.resize(n);
    const std::size_t plane = opt.canvas * opt.canvas;
    const int base_x = static_cast<int>(opt.canvas - 6) / 2;
    const int base_y = static_cast<int>(opt.canvas - 10) / 2;
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng(seed, i);
        const int digit = static_cast<int>(rng.uniform_int(10));
        d.labels[i] = digit;
        double* img = d.images.data.data() + i * plane;
        for (std::size_t p = 0; p < plane; ++p) img[p] = rng.uniform(0.0, opt.noise);
        const int ox = base_x + static_cast<int>(rng.uniform_int(
                                    static_cast<std::uint64_t>(2 * opt.jitter_x + 1))) -
                       opt.jitter_x;
        const int oy = base_y + static_cast<int>(rng.uniform_int(
                                    static_cast<std::uint64_t>(2 * opt.jitter_y + 1))) -
                       opt.jitter_y;
        draw_glyph(img, opt.canvas, digit, ox, oy, rng, opt);
    }
    return d;
}

} // namespace ggd

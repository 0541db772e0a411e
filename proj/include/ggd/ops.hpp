// Copyright (c) 2026 ggd contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cfloat>
#include <cmath>

#include "ggd/tape.hpp"
#include "ggd/tensor.hpp"

namespace ggd {

namespace detail {

// Row view of the last axis: tensors of rank 1 are one row.
inline std::size_t last_axis(const Tensor& t) {
    if (t.rank() == 0 || t.dim(t.rank() - 1) == 0)
        throw ContractError("softmax: empty last axis");
    return t.dim(t.rank() - 1);
}

inline void softmax_row(const double* z, double* out, std::size_t n) {
    double m = z[0];
    for (std::size_t j = 1; j < n; ++j) m = std::max(m, z[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        out[j] = std::exp(z[j] - m);
        sum += out[j];
    }
    for (std::size_t j = 0; j < n; ++j) {
        out[j] /= sum;
        if (out[j] < DBL_MIN) out[j] = DBL_MIN; // strictly positive output
    }
}

inline void log_softmax_row(const double* z, double* out, std::size_t n) {
    double m = z[0];
    for (std::size_t j = 1; j < n; ++j) m = std::max(m, z[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) sum += std::exp(z[j] - m);
    const double lse = m + std::log(sum);
    for (std::size_t j = 0; j < n; ++j) out[j] = z[j] - lse;
}

} // namespace detail

/// Numerically stable softmax over the last axis. Every row sums to 1
/// within 1e-12 for any finite input.
inline Tensor softmax(const Tensor& logits) {
    if (!logits.all_finite()) throw NumericError("softmax: non-finite input");
    const std::size_t C = detail::last_axis(logits);
    const std::size_t rows = logits.size() / C;
    Tensor out(logits.shape);
    for (std::size_t r = 0; r < rows; ++r)
        detail::softmax_row(logits.data.data() + r * C, out.data.data() + r * C, C);
    return out;
}

/// Soft-target cross entropy: -sum_j w_j log softmax_j(z), averaged over
/// the batch (first) axis. Targets may be sub-stochastic; rows need not
/// sum to 1. Rank-1 inputs are treated as a single sample.
inline double cross_entropy_soft(const Tensor& logits, const Tensor& target_weights) {
    require_same_shape(logits, target_weights, "cross_entropy_soft");
    if (!logits.all_finite()) throw NumericError("cross_entropy_soft: non-finite logits");
    const std::size_t C = detail::last_axis(logits);
    const std::size_t rows = logits.size() / C;
    std::vector<double> logp(C);
    double total = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        detail::log_softmax_row(logits.data.data() + r * C, logp.data(), C);
        const double* w = target_weights.data.data() + r * C;
        for (std::size_t j = 0; j < C; ++j) {
            if (w[j] < 0.0)
                throw ContractError("cross_entropy_soft: negative target weight at row " +
                                    std::to_string(r) + " class " + std::to_string(j));
            total -= w[j] * logp[j];
        }
    }
    return total / static_cast<double>(rows);
}

/// Tape node for cross_entropy_soft against fixed (detached) targets.
/// The gradient w.r.t. logits uses the closed form
///   d/dz_k = (-w_k + (sum_j w_j) * softmax_k(z)) / rows,
/// which is exact for sub-stochastic targets.
inline int cross_entropy_soft_node(Tape& tape, int logits_slot, Tensor target_weights) {
    const Tensor& logits = tape.value(logits_slot);
    require_same_shape(logits, target_weights, "cross_entropy_soft");
    const std::size_t C = detail::last_axis(logits);
    const std::size_t rows = logits.size() / C;
    const double loss = cross_entropy_soft(logits, target_weights);
    const int out_slot = static_cast<int>(tape.node_count());
    Tensor w = std::move(target_weights);
    return tape.push(Tensor({1}, {loss}), [logits_slot, out_slot, w, rows, C](Tape& t) {
        const double g = t.grad(out_slot)[0];
        if (g == 0.0) return;
        const Tensor& z = t.value(logits_slot);
        std::vector<double>& gz = t.grad(logits_slot);
        std::vector<double> sigma(C);
        const double inv_rows = 1.0 / static_cast<double>(rows);
        for (std::size_t r = 0; r < rows; ++r) {
            detail::softmax_row(z.data.data() + r * C, sigma.data(), C);
            const double* wr = w.data.data() + r * C;
            double wsum = 0.0;
            for (std::size_t j = 0; j < C; ++j) wsum += wr[j];
            for (std::size_t j = 0; j < C; ++j)
                gz[r * C + j] += g * inv_rows * (wsum * sigma[j] - wr[j]);
        }
    });
}

/// Scalar combination ca*A + cb*B of two scalar slots.
inline int combine_scalars_node(Tape& tape, int a_slot, int b_slot, double ca, double cb) {
    if (tape.value(a_slot).size() != 1 || tape.value(b_slot).size() != 1)
        throw ContractError("combine_scalars: operands must be scalar");
    const double v = ca * tape.value(a_slot).data[0] + cb * tape.value(b_slot).data[0];
    const int out_slot = static_cast<int>(tape.node_count());
    return tape.push(Tensor({1}, {v}), [a_slot, b_slot, out_slot, ca, cb](Tape& t) {
        const double g = t.grad(out_slot)[0];
        t.grad(a_slot)[0] += ca * g;
        t.grad(b_slot)[0] += cb * g;
    });
}

} // namespace ggd

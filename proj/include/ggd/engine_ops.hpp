// Copyright (c) 2026 ggd contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "ggd/model.hpp"
#include "ggd/ops.hpp"

namespace ggd {

/// Rowwise Y - softmax(H): the steepest-descent direction of the CE loss
/// in prediction space, used as a raw pseudo-label.
inline Tensor negative_gradient(const Tensor& ensemble_logits, const Tensor& y_onehot) {
    require_same_shape(ensemble_logits, y_onehot, "negative_gradient");
    Tensor out = softmax(ensemble_logits);
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = y_onehot.data[i] - out.data[i];
    return out;
}

/// Clips the raw negative gradient into the label space [0,1]: entries
/// off the true classes become 0, entries on them are floored at 0. A
/// biased ensemble that is fully confident and correct on a sample thus
/// leaves an all-zero row, removing the sample from base-model training.
inline Tensor clip_pseudo(const Tensor& raw, const Tensor& y_onehot) {
    require_same_shape(raw, y_onehot, "clip_pseudo");
    Tensor out = raw;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (y_onehot.data[i] > 0.0) {
            if (out.data[i] < 0.0) out.data[i] = 0.0;
        } else {
            out.data[i] = 0.0;
        }
    }
    return out;
}

/// Reference prediction Y o softmax(H): the ensemble's confidence on the
/// true classes only.
inline Tensor reference_prediction(const Tensor& ensemble_logits, const Tensor& y_onehot) {
    require_same_shape(ensemble_logits, y_onehot, "reference_prediction");
    Tensor out = softmax(ensemble_logits);
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= y_onehot.data[i];
    return out;
}

/// Curriculum-regularized base loss CE(f,Y) - lambda * CE(f, sigma_hat).
/// At lambda = 1 with one-hot labels this equals the CE against the
/// clipped pseudo-label, so gradient supervision is the lambda = 1
/// special case.
inline double regularized_base_loss(const Tensor& f_logits, const Tensor& y_onehot,
                                    const Tensor& sigma_hat, double lambda) {
    if (lambda < 0.0 || lambda > 1.0)
        throw ContractError("regularized_base_loss: lambda must be in [0,1]");
    return cross_entropy_soft(f_logits, y_onehot) -
           lambda * cross_entropy_soft(f_logits, sigma_hat);
}

/// The ordered biased models plus the per-batch logit accumulation H_m.
/// H_0 is zero; H_m adds model m's fresh forward logits elementwise.
struct EnsembleState {
    std::vector<Model> biased;

    std::size_t size() const { return biased.size(); }

    /// Fresh forward passes of models [0, upto) summed on this batch.
    Tensor accumulated_logits(const LabeledBatch& batch, std::size_t upto) const {
        if (upto > biased.size())
            throw ContractError("EnsembleState: accumulation index out of range");
        Tensor h({batch.size(), batch.onehot.dim(1)});
        for (std::size_t m = 0; m < upto; ++m) {
            const Tensor logits = forward_logits(biased[m], batch);
            require_same_shape(h, logits, "EnsembleState accumulation");
            for (std::size_t i = 0; i < h.size(); ++i) h.data[i] += logits.data[i];
        }
        return h;
    }
};

} // namespace ggd

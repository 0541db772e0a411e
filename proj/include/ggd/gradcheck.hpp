// Copyright (c) 2026 ggd contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>

#include "ggd/model.hpp"

namespace ggd {

/// A differentiable quantity to verify: `loss` evaluates it under the
/// current parameters, `compute_grads` fills every parameter's grad
/// buffer analytically.
struct GradCheckTarget {
    std::function<double()> loss;
    std::function<void()> compute_grads;
    std::vector<Tensor*> params;
};

/// Central-difference check. Returns the max over all parameter entries
/// of |analytic - numeric| / max(1, |analytic|, |numeric|). Refuses to
/// perturb more than `max_entries` parameters unless a larger budget is
/// declared by the caller.
inline double finite_diff_check(GradCheckTarget& target, double step,
                                std::size_t max_entries = 10000) {
    if (step <= 0.0) throw ContractError("finite_diff_check: step must be positive");
    std::size_t total = 0;
    for (Tensor* p : target.params) total += p->size();
    if (total > max_entries)
        throw ContractError("finite_diff_check: " + std::to_string(total) +
                            " parameter entries exceed the declared budget of " +
                            std::to_string(max_entries));
    target.compute_grads();
    std::vector<std::vector<double>> analytic;
    analytic.reserve(target.params.size());
    for (Tensor* p : target.params) analytic.push_back(p->grad);

    double worst = 0.0;
    for (std::size_t pi = 0; pi < target.params.size(); ++pi) {
        Tensor* p = target.params[pi];
        for (std::size_t i = 0; i < p->size(); ++i) {
            const double orig = p->data[i];
            p->data[i] = orig + step;
            const double hi = target.loss();
            p->data[i] = orig - step;
            const double lo = target.loss();
            p->data[i] = orig;
            const double numeric = (hi - lo) / (2.0 * step);
            const double a = analytic[pi][i];
            const double err =
                std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
            worst = std::max(worst, err);
        }
    }
    return worst;
}

/// Convenience form: checks the soft-target CE training loss of a model
/// on a batch against its one-hot labels.
inline double finite_diff_check(Model& model, const LabeledBatch& batch, double step,
                                std::size_t max_entries = 10000) {
    GradCheckTarget target;
    target.params = model.parameters();
    target.loss = [&model, &batch] {
        return cross_entropy_soft(forward_logits(model, batch), batch.onehot);
    };
    target.compute_grads = [&model, &batch] {
        Tape tape;
        const int logits = forward_on_tape(model, batch, tape);
        const int loss = cross_entropy_soft_node(tape, logits, batch.onehot);
        tape.backward(loss);
    };
    return finite_diff_check(target, step, max_entries);
}

} // namespace ggd

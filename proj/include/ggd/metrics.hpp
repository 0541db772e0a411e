// Copyright (c) 2026 ggd contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "ggd/engine_ops.hpp"
#include "ggd/model.hpp"

namespace ggd {

inline double accuracy(const std::vector<int>& preds, const std::vector<int>& labels) {
    if (preds.empty() || preds.size() != labels.size())
        throw ContractError("accuracy: empty or mismatched inputs");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < preds.size(); ++i)
        if (preds[i] == labels[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(preds.size());
}

/// Per-class accuracy conditioned on the true label. Classes with no
/// samples get NaN.
inline std::vector<double> per_class_accuracy(const std::vector<int>& preds,
                                              const std::vector<int>& labels, int num_classes) {
    if (preds.empty() || preds.size() != labels.size())
        throw ContractError("per_class_accuracy: empty or mismatched inputs");
    std::vector<double> hits(static_cast<std::size_t>(num_classes), 0.0);
    std::vector<double> totals(static_cast<std::size_t>(num_classes), 0.0);
    for (std::size_t i = 0; i < preds.size(); ++i) {
        totals[static_cast<std::size_t>(labels[i])] += 1.0;
        if (preds[i] == labels[i]) hits[static_cast<std::size_t>(labels[i])] += 1.0;
    }
    std::vector<double> out(static_cast<std::size_t>(num_classes));
    for (std::size_t c = 0; c < out.size(); ++c)
        out[c] = totals[c] > 0.0 ? hits[c] / totals[c] : std::nan("");
    return out;
}

inline double mean_ignoring_nan(const std::vector<double>& v) {
    double s = 0.0;
    std::size_t n = 0;
    for (double x : v)
        if (!std::isnan(x)) {
            s += x;
            ++n;
        }
    return n ? s / static_cast<double>(n) : std::nan("");
}

/// C x C count matrix; entry (i,j) counts samples with reference i and
/// prediction j. The axis tag records whether the reference axis is the
/// ground-truth label or the bias attribute.
struct ConfusionMatrix {
    enum class Axis : std::uint8_t { VsLabel = 0, VsBias = 1 };
    int num_classes = 0;
    Axis axis = Axis::VsLabel;
    std::vector<std::size_t> counts; // row-major (reference, prediction)

    std::size_t at(int ref, int pred) const {
        return counts[static_cast<std::size_t>(ref) * static_cast<std::size_t>(num_classes) +
                      static_cast<std::size_t>(pred)];
    }
    std::size_t total() const { return std::accumulate(counts.begin(), counts.end(), std::size_t{0}); }
    std::size_t trace() const {
        std::size_t t = 0;
        for (int c = 0; c < num_classes; ++c) t += at(c, c);
        return t;
    }
};

inline ConfusionMatrix confusion(const std::vector<int>& preds, const std::vector<int>& reference,
                                 int num_classes, ConfusionMatrix::Axis axis) {
    if (preds.size() != reference.size())
        throw ContractError("confusion: mismatched input lengths");
    ConfusionMatrix m;
    m.num_classes = num_classes;
    m.axis = axis;
    m.counts.assign(static_cast<std::size_t>(num_classes) * static_cast<std::size_t>(num_classes),
                    0);
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (reference[i] < 0 || reference[i] >= num_classes || preds[i] < 0 ||
            preds[i] >= num_classes)
            throw ContractError("confusion: index out of class range at sample " +
                                std::to_string(i));
        ++m.counts[static_cast<std::size_t>(reference[i]) * static_cast<std::size_t>(num_classes) +
                   static_cast<std::size_t>(preds[i])];
    }
    return m;
}

/// Masked-over-total loss ratio. Zero when the total loss is zero.
inline double hard_ratio(const std::vector<double>& per_sample_losses,
                         const std::vector<bool>& hard_mask) {
    if (per_sample_losses.size() != hard_mask.size())
        throw ContractError("hard_ratio: mask length mismatch");
    double hard = 0.0, all = 0.0;
    for (std::size_t i = 0; i < per_sample_losses.size(); ++i) {
        if (per_sample_losses[i] < 0.0) throw ContractError("hard_ratio: negative loss");
        all += per_sample_losses[i];
        if (hard_mask[i]) hard += per_sample_losses[i];
    }
    return all == 0.0 ? 0.0 : hard / all;
}

inline double grad_cosine(const std::vector<double>& g1, const std::vector<double>& g2) {
    if (g1.size() != g2.size() || g1.empty())
        throw ContractError("grad_cosine: mismatched or empty inputs");
    double dot = 0.0, n1 = 0.0, n2 = 0.0;
    for (std::size_t i = 0; i < g1.size(); ++i) {
        dot += g1[i] * g2[i];
        n1 += g1[i] * g1[i];
        n2 += g2[i] * g2[i];
    }
    if (n1 == 0.0 || n2 == 0.0) throw ContractError("grad_cosine: zero vector");
    return dot / (std::sqrt(n1) * std::sqrt(n2));
}

namespace detail {

inline std::vector<double> midranks(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double mid = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mid;
        i = j + 1;
    }
    return ranks;
}

} // namespace detail

/// Spearman rank correlation, ties mid-ranked. Returns 0 when either
/// input is constant (no ordering to correlate).
inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2)
        throw ContractError("spearman: need two vectors of equal length >= 2");
    const std::vector<double> ra = detail::midranks(a), rb = detail::midranks(b);
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= n;
    mb /= n;
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        cov += (ra[i] - ma) * (rb[i] - mb);
        va += (ra[i] - ma) * (ra[i] - ma);
        vb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (va == 0.0 || vb == 0.0) return 0.0;
    return cov / std::sqrt(va * vb);
}

/// Pseudo-label distribution diagnostics against the class prior.
///
/// per_class_mass[c] is the mean clipped pseudo-label mass received per
/// sample of class c (the supervision strength class c keeps under the
/// ensemble). mass_share[c] is the same mass averaged over the whole
/// dataset instead; at H = 0 it equals (1 - 1/C) * prior exactly.
/// rank_correlation is Spearman between per_class_mass and the prior: a
/// negative value means majority classes receive less supervision per
/// sample than minority ones, the inverted-distribution signature.
struct DriftReport {
    std::vector<double> per_class_mass;
    std::vector<double> mass_share;
    double rank_correlation = 0.0;
};

inline DriftReport pseudo_label_drift(const Tensor& ensemble_logits, const Tensor& y_onehot,
                                      const std::vector<double>& class_prior) {
    require_same_shape(ensemble_logits, y_onehot, "pseudo_label_drift");
    const std::size_t C = y_onehot.dim(y_onehot.rank() - 1);
    if (class_prior.size() != C)
        throw ContractError("pseudo_label_drift: prior length must equal class count");
    const Tensor pseudo = clip_pseudo(negative_gradient(ensemble_logits, y_onehot), y_onehot);
    const std::size_t rows = pseudo.size() / C;
    DriftReport r;
    r.per_class_mass.assign(C, 0.0);
    r.mass_share.assign(C, 0.0);
    std::vector<double> class_counts(C, 0.0);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < C; ++j) {
            r.mass_share[j] += pseudo.data[i * C + j];
            if (y_onehot.data[i * C + j] > 0.0) {
                r.per_class_mass[j] += pseudo.data[i * C + j];
                class_counts[j] += 1.0;
            }
        }
    for (std::size_t j = 0; j < C; ++j) {
        r.mass_share[j] /= static_cast<double>(rows);
        if (class_counts[j] > 0.0) r.per_class_mass[j] /= class_counts[j];
    }
    r.rank_correlation = spearman(r.per_class_mass, class_prior);
    return r;
}

/// One accuracy per held-out dataset, keyed as given.
inline std::map<std::string, double> evaluate_grid(
    const Model& model, const std::map<std::string, const BiasedDataset*>& grid) {
    std::map<std::string, double> out;
    for (const auto& [name, data] : grid) {
        const LabeledBatch batch = full_batch(*data);
        out[name] = accuracy(predict_classes(model, batch), batch.labels);
    }
    return out;
}

// CSV export: one header row, comma separated, '.' decimal.

inline std::string matrix_to_csv(const ConfusionMatrix& m) {
    std::string s = m.axis == ConfusionMatrix::Axis::VsLabel ? "label\\pred" : "bias\\pred";
    for (int c = 0; c < m.num_classes; ++c) s += "," + std::to_string(c);
    s += "\n";
    for (int r = 0; r < m.num_classes; ++r) {
        s += std::to_string(r);
        for (int c = 0; c < m.num_classes; ++c) s += "," + std::to_string(m.at(r, c));
        s += "\n";
    }
    return s;
}

} // namespace ggd

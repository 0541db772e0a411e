// Copyright (c) 2026 ggd contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "ggd/tensor.hpp"

namespace ggd {

/// Grayscale source images, shape (N,1,H,W), values in [0,1].
struct RawDataset {
    Tensor images;
    std::vector<int> labels;
    int num_classes = 10;

    std::size_t size() const { return labels.size(); }

    void validate() const {
        if (labels.empty()) throw DataError("RawDataset: empty");
        if (images.rank() != 4 || images.dim(0) != labels.size() || images.dim(1) != 1)
            throw DimensionError("RawDataset: images must be (N,1,H,W) with N = label count, got " +
                                 images.shape_str());
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] < 0 || labels[i] >= num_classes)
                throw DataError("RawDataset: label " + std::to_string(labels[i]) +
                                " out of range at index " + std::to_string(i));
    }
};

/// Synthesized dataset with a per-sample bias attribute: the assigned
/// background color index, or the group index for long-tailed / grouped
/// data. `rho` is the spurious-correlation level it was generated with.
struct BiasedDataset {
    Tensor images; // (N,C,H,W)
    std::vector<int> labels;
    std::vector<int> bias_attr;
    double rho = 0.0;
    std::uint64_t seed = 0;
    int num_classes = 10;

    std::size_t size() const { return labels.size(); }

    void validate() const {
        if (labels.empty()) throw DataError("BiasedDataset: empty");
        if (bias_attr.size() != labels.size())
            throw DataError("BiasedDataset: bias_attr length mismatch");
        if (images.rank() != 4 || images.dim(0) != labels.size())
            throw DimensionError("BiasedDataset: images must be (N,C,H,W) with N = label count, got " +
                                 images.shape_str());
    }
};

/// One minibatch: features plus labels in both index and one-hot form,
/// and the bias attribute carried along for grouped models and
/// diagnostics.
struct LabeledBatch {
    Tensor features; // (B,C,H,W)
    std::vector<int> labels;
    Tensor onehot; // (B,num_classes)
    std::vector<int> bias_attr;

    std::size_t size() const { return labels.size(); }
};

inline Tensor one_hot(const std::vector<int>& labels, int num_classes) {
    Tensor out({labels.size(), static_cast<std::size_t>(num_classes)});
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= num_classes)
            throw DataError("one_hot: label out of range at index " + std::to_string(i));
        out.data[i * static_cast<std::size_t>(num_classes) + static_cast<std::size_t>(labels[i])] = 1.0;
    }
    return out;
}

/// Gathers the given sample indices into a batch.
inline LabeledBatch make_batch(const BiasedDataset& d, const std::vector<std::size_t>& indices) {
    if (indices.empty()) throw ContractError("make_batch: empty index list");
    const std::size_t C = d.images.dim(1), H = d.images.dim(2), W = d.images.dim(3);
    const std::size_t stride = C * H * W;
    LabeledBatch b;
    b.features = Tensor({indices.size(), C, H, W});
    b.labels.reserve(indices.size());
    b.bias_attr.reserve(indices.size());
    for (std::size_t k = 0; k < indices.size(); ++k) {
        const std::size_t i = indices[k];
        if (i >= d.size()) throw ContractError("make_batch: index out of range");
        std::copy(d.images.data.begin() + static_cast<std::ptrdiff_t>(i * stride),
                  d.images.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * stride),
                  b.features.data.begin() + static_cast<std::ptrdiff_t>(k * stride));
        b.labels.push_back(d.labels[i]);
        b.bias_attr.push_back(d.bias_attr[i]);
    }
    b.onehot = one_hot(b.labels, d.num_classes);
    return b;
}

/// The whole dataset as one batch (evaluation convenience).
inline LabeledBatch full_batch(const BiasedDataset& d) {
    std::vector<std::size_t> idx(d.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    return make_batch(d, idx);
}

} // namespace ggd

// Copyright (c) 2026 ggd contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "ggd/data.hpp"
#include "ggd/layers.hpp"
#include "ggd/log.hpp"
#include "ggd/ops.hpp"
#include "ggd/rng.hpp"

namespace ggd {

enum class ModelKind : std::uint8_t {
    Base = 0,
    LowCapacity = 1,
    ExplicitFeature = 2,
    SelfEnsemble = 3,
    StaticDistribution = 4,
};

inline const char* model_kind_name(ModelKind k) {
    switch (k) {
        case ModelKind::Base: return "base";
        case ModelKind::LowCapacity: return "low_capacity";
        case ModelKind::ExplicitFeature: return "explicit_feature";
        case ModelKind::SelfEnsemble: return "self_ensemble";
        case ModelKind::StaticDistribution: return "static_distribution";
    }
    return "?";
}

/// How a model reads its input out of a batch before the layer stack.
enum class FeatureSelector : std::uint8_t {
    Identity = 0,  // the image tensor as-is
    MeanColor = 1, // per-image mean of each channel -> (B, channels)
    Flatten = 2,   // (B,C,H,W) -> (B, C*H*W) for MLP heads
};

/// Where a static-distribution model finds a sample's group index.
enum class StaticGrouping : std::uint8_t {
    Global = 0,   // one group for the whole dataset
    BiasAttr = 1, // the batch's bias attribute
};

/// A parameterized map from batch features to class logits, built from a
/// layer list. StaticDistribution models carry a frequency table instead
/// of trainable layers and are skipped by optimizer updates.
struct Model {
    std::vector<Layer> layers;
    ModelKind kind = ModelKind::Base;
    FeatureSelector selector = FeatureSelector::Identity;
    StaticGrouping grouping = StaticGrouping::Global;
    std::vector<std::size_t> input_signature; // (C,H,W), 0 = unconstrained
    int num_classes = 0;

    // static-distribution table: log p(y|g) per group row, plus the
    // global log-prior fallback for unseen groups
    Tensor group_log_prob; // (G, num_classes)
    std::vector<double> global_log_prior;

    bool trainable() const { return kind != ModelKind::StaticDistribution; }

    std::vector<Tensor*> parameters() {
        std::vector<Tensor*> ps;
        for (Layer& l : layers)
            if (l.has_params()) {
                ps.push_back(&l.weight);
                ps.push_back(&l.bias);
            }
        return ps;
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const Layer& l : layers)
            if (l.has_params()) n += l.weight.size() + l.bias.size();
        return n;
    }
};

/// Seed-deterministic parameter initialization: identical (architecture,
/// seed) pairs produce bit-identical parameters.
inline void init_model(Model& m, std::uint64_t seed) {
    for (std::size_t i = 0; i < m.layers.size(); ++i) {
        Rng rng(mix_seed(seed, i));
        init_layer(m.layers[i], rng);
    }
}

/// Stacked conv(kernel) + per-channel affine + ReLU blocks, one per
/// channel entry, then GlobalAvgPool and a linear head. With kernel 1 the
/// receptive field of every pre-pool unit is a single pixel, which is
/// what makes the low-capacity variant a texture-only model.
inline Model build_simplenet(int kernel, const std::vector<int>& channels, int num_classes,
                             int in_channels = 3) {
    if (channels.empty()) throw ContractError("build_simplenet: channel list must be non-empty");
    if (num_classes <= 1) throw ContractError("build_simplenet: need at least 2 classes");
    Model m;
    m.kind = kernel == 1 ? ModelKind::LowCapacity : ModelKind::Base;
    m.num_classes = num_classes;
    m.input_signature = {static_cast<std::size_t>(in_channels), 0, 0};
    int prev = in_channels;
    for (int ch : channels) {
        m.layers.push_back(make_conv2d(prev, ch, kernel));
        m.layers.push_back(make_channel_affine(ch));
        m.layers.push_back(make_relu());
        prev = ch;
    }
    m.layers.push_back(make_global_avg_pool());
    m.layers.push_back(make_linear(prev, num_classes));
    return m;
}

/// MLP over the per-image mean RGB vector. The selector collapses the
/// image to 3 inputs, so two images with identical mean color always get
/// identical logits.
inline Model build_background_model(int num_classes, int hidden = 16) {
    if (num_classes <= 1) throw ContractError("build_background_model: need at least 2 classes");
    Model m;
    m.kind = ModelKind::ExplicitFeature;
    m.selector = FeatureSelector::MeanColor;
    m.num_classes = num_classes;
    m.input_signature = {3, 0, 0};
    m.layers.push_back(make_linear(3, hidden));
    m.layers.push_back(make_relu());
    m.layers.push_back(make_linear(hidden, num_classes));
    return m;
}

/// Plain MLP over flattened features, for the flat-vector synthetic
/// datasets.
inline Model build_mlp(int input_dim, const std::vector<int>& hidden, int num_classes) {
    if (input_dim <= 0) throw ContractError("build_mlp: input_dim must be positive");
    if (num_classes <= 1) throw ContractError("build_mlp: need at least 2 classes");
    Model m;
    m.kind = ModelKind::Base;
    m.selector = FeatureSelector::Flatten;
    m.num_classes = num_classes;
    int prev = input_dim;
    for (int h : hidden) {
        m.layers.push_back(make_linear(prev, h));
        m.layers.push_back(make_relu());
        prev = h;
    }
    m.layers.push_back(make_linear(prev, num_classes));
    return m;
}

/// Smoothed group-conditional class priors:
///   p(y|g) = (count(y,g) + epsilon) / (count(g) + C * epsilon).
/// Emits log p(y|g) as logits; carries no trainable parameters.
inline Model build_static_distribution(const std::vector<int>& labels,
                                       const std::vector<int>& groups, double epsilon,
                                       int num_classes,
                                       StaticGrouping grouping = StaticGrouping::BiasAttr) {
    if (epsilon <= 0.0) throw ContractError("build_static_distribution: epsilon must be > 0");
    if (labels.size() != groups.size())
        throw ContractError("build_static_distribution: labels and groups must align");
    if (labels.empty()) throw ContractError("build_static_distribution: empty inputs");
    int num_groups = 0;
    for (int g : groups) {
        if (g < 0) throw ContractError("build_static_distribution: negative group index");
        num_groups = std::max(num_groups, g + 1);
    }
    const std::size_t C = static_cast<std::size_t>(num_classes);
    std::vector<double> counts(static_cast<std::size_t>(num_groups) * C, 0.0);
    std::vector<double> group_totals(static_cast<std::size_t>(num_groups), 0.0);
    std::vector<double> global_counts(C, 0.0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= num_classes)
            throw ContractError("build_static_distribution: label out of range");
        counts[static_cast<std::size_t>(groups[i]) * C + static_cast<std::size_t>(labels[i])] += 1.0;
        group_totals[static_cast<std::size_t>(groups[i])] += 1.0;
        global_counts[static_cast<std::size_t>(labels[i])] += 1.0;
    }
    Model m;
    m.kind = ModelKind::StaticDistribution;
    m.grouping = grouping;
    m.num_classes = num_classes;
    m.group_log_prob = Tensor({static_cast<std::size_t>(num_groups), C});
    for (int g = 0; g < num_groups; ++g)
        for (std::size_t y = 0; y < C; ++y)
            m.group_log_prob.data[static_cast<std::size_t>(g) * C + y] =
                std::log((counts[static_cast<std::size_t>(g) * C + y] + epsilon) /
                         (group_totals[static_cast<std::size_t>(g)] + num_classes * epsilon));
    m.global_log_prior.resize(C);
    const double total = static_cast<double>(labels.size());
    for (std::size_t y = 0; y < C; ++y)
        m.global_log_prior[y] =
            std::log((global_counts[y] + epsilon) / (total + num_classes * epsilon));
    return m;
}

/// Global-prior variant: one group covering the whole training set.
inline Model build_static_distribution_global(const std::vector<int>& labels, double epsilon,
                                              int num_classes) {
    return build_static_distribution(labels, std::vector<int>(labels.size(), 0), epsilon,
                                     num_classes, StaticGrouping::Global);
}

/// Structurally identical model with freshly initialized parameters.
inline Model clone_architecture(const Model& base, std::uint64_t seed) {
    Model m = base;
    m.kind = ModelKind::SelfEnsemble;
    init_model(m, seed);
    return m;
}

namespace detail {

inline Tensor select_features(const Model& m, const LabeledBatch& batch) {
    switch (m.selector) {
        case FeatureSelector::Identity:
            return batch.features;
        case FeatureSelector::MeanColor: {
            if (batch.features.rank() != 4)
                throw DimensionError("MeanColor selector: expected (B,C,H,W) features, got " +
                                     batch.features.shape_str());
            const std::size_t B = batch.features.dim(0), C = batch.features.dim(1);
            if (C > 16)
                throw DimensionError("MeanColor selector: supports at most 16 channels");
            const std::size_t plane = batch.features.dim(2) * batch.features.dim(3);
            Tensor out({B, C});
            // Mean over background pixels only. Digit strokes are exactly
            // grayscale (all channels equal) while background colors are
            // not, so grayscale pixels are excluded; if an image has no
            // colored pixel at all, fall back to the whole-image mean.
            for (std::size_t b = 0; b < B; ++b) {
                const double* img = batch.features.data.data() + b * C * plane;
                double sums[16] = {0.0};
                double count = 0.0;
                for (std::size_t i = 0; i < plane; ++i) {
                    bool grayscale = true;
                    for (std::size_t c = 1; c < C; ++c)
                        if (img[c * plane + i] != img[i]) {
                            grayscale = false;
                            break;
                        }
                    if (grayscale && C > 1) continue;
                    for (std::size_t c = 0; c < C; ++c) sums[c] += img[c * plane + i];
                    count += 1.0;
                }
                if (count == 0.0) {
                    for (std::size_t i = 0; i < plane; ++i)
                        for (std::size_t c = 0; c < C; ++c) sums[c] += img[c * plane + i];
                    count = static_cast<double>(plane);
                }
                for (std::size_t c = 0; c < C; ++c) out.data[b * C + c] = sums[c] / count;
            }
            return out;
        }
        case FeatureSelector::Flatten: {
            if (batch.features.rank() < 2)
                throw DimensionError("Flatten selector: expected batched features, got " +
                                     batch.features.shape_str());
            const std::size_t B = batch.features.dim(0);
            Tensor out = batch.features;
            out.shape = {B, out.size() / B};
            return out;
        }
    }
    throw ContractError("select_features: unhandled selector");
}

inline Tensor static_logits(const Model& m, const LabeledBatch& batch) {
    const std::size_t B = batch.size(), C = static_cast<std::size_t>(m.num_classes);
    const std::size_t G = m.group_log_prob.rank() ? m.group_log_prob.dim(0) : 0;
    Tensor out({B, C});
    for (std::size_t b = 0; b < B; ++b) {
        std::size_t g = 0;
        if (m.grouping == StaticGrouping::BiasAttr)
            g = static_cast<std::size_t>(batch.bias_attr[b]);
        if (g < G) {
            std::copy(m.group_log_prob.data.begin() + static_cast<std::ptrdiff_t>(g * C),
                      m.group_log_prob.data.begin() + static_cast<std::ptrdiff_t>((g + 1) * C),
                      out.data.begin() + static_cast<std::ptrdiff_t>(b * C));
        } else {
            log_debug("static distribution: unseen group " + std::to_string(g) +
                      ", falling back to the global prior");
            std::copy(m.global_log_prior.begin(), m.global_log_prior.end(),
                      out.data.begin() + static_cast<std::ptrdiff_t>(b * C));
        }
    }
    return out;
}

inline void check_signature(const Model& m, const Tensor& features) {
    if (m.input_signature.empty()) return;
    if (features.rank() != m.input_signature.size() + 1)
        throw DimensionError(std::string("model ") + model_kind_name(m.kind) +
                             ": input rank mismatch, got " + features.shape_str());
    for (std::size_t a = 0; a < m.input_signature.size(); ++a) {
        if (m.input_signature[a] == 0) continue;
        if (features.dim(a + 1) != m.input_signature[a])
            throw DimensionError(std::string("model ") + model_kind_name(m.kind) +
                                 ": input axis " + std::to_string(a + 1) + " has size " +
                                 std::to_string(features.dim(a + 1)) + ", expected " +
                                 std::to_string(m.input_signature[a]));
    }
}

} // namespace detail

/// Forward pass recorded on a tape; returns the logits slot. Static
/// models contribute a leaf (no gradients flow into them).
inline int forward_on_tape(Model& m, const LabeledBatch& batch, Tape& tape) {
    if (batch.size() == 0) throw ContractError("forward: empty batch");
    if (m.kind == ModelKind::StaticDistribution)
        return tape.push_leaf(detail::static_logits(m, batch));
    Tensor features = detail::select_features(m, batch);
    if (m.selector == FeatureSelector::Identity) detail::check_signature(m, features);
    int slot = tape.push_leaf(std::move(features));
    for (Layer& l : m.layers) slot = apply_layer(l, slot, tape);
    return slot;
}

/// Forward pass without gradient recording.
inline Tensor forward_logits(const Model& m, const LabeledBatch& batch) {
    Tape tape;
    // apply_layer takes mutable layers for parameter registration; the
    // pass itself never writes to them
    const int slot = forward_on_tape(const_cast<Model&>(m), batch, tape);
    return tape.value(slot);
}

inline std::vector<int> predict_classes(const Model& m, const LabeledBatch& batch) {
    const Tensor logits = forward_logits(m, batch);
    const std::size_t C = logits.dim(1);
    std::vector<int> preds(logits.dim(0));
    for (std::size_t b = 0; b < preds.size(); ++b) {
        const double* row = logits.data.data() + b * C;
        std::size_t best = 0;
        for (std::size_t j = 1; j < C; ++j)
            if (row[j] > row[best]) best = j;
        preds[b] = static_cast<int>(best);
    }
    return preds;
}

// ---------------------------------------------------------------------
// Checkpoint container: "GGDM" magic, version, kind/selector tags, layer
// descriptors, raw f64 parameter payloads. Round-trip exact.
// ---------------------------------------------------------------------

inline constexpr char kModelMagic[4] = {'G', 'G', 'D', 'M'};
inline constexpr std::uint32_t kModelVersion = 1;

namespace detail {

template <typename T>
void write_pod_m(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod_m(std::istream& is, T& v, const char* what) {
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw FormatError(std::string("model container: truncated reading ") + what);
}

inline void write_tensor(std::ostream& os, const Tensor& t) {
    write_pod_m(os, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape) write_pod_m(os, static_cast<std::uint32_t>(d));
    os.write(reinterpret_cast<const char*>(t.data.data()),
             static_cast<std::streamsize>(t.data.size() * sizeof(double)));
}

inline Tensor read_tensor(std::istream& is) {
    std::uint32_t rank;
    read_pod_m(is, rank, "tensor rank");
    std::vector<std::size_t> shape(rank);
    for (std::uint32_t i = 0; i < rank; ++i) {
        std::uint32_t d;
        read_pod_m(is, d, "tensor shape");
        shape[i] = d;
    }
    Tensor t(shape);
    is.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    if (!is) throw FormatError("model container: truncated tensor payload");
    return t;
}

} // namespace detail

inline void save_model(const std::string& path, const Model& m) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw FormatError("cannot open " + path + " for writing");
    os.write(kModelMagic, 4);
    detail::write_pod_m(os, kModelVersion);
    detail::write_pod_m(os, static_cast<std::uint8_t>(m.kind));
    detail::write_pod_m(os, static_cast<std::uint8_t>(m.selector));
    detail::write_pod_m(os, static_cast<std::uint8_t>(m.grouping));
    detail::write_pod_m(os, static_cast<std::uint32_t>(m.num_classes));
    detail::write_pod_m(os, static_cast<std::uint32_t>(m.input_signature.size()));
    for (std::size_t d : m.input_signature)
        detail::write_pod_m(os, static_cast<std::uint32_t>(d));
    detail::write_pod_m(os, static_cast<std::uint32_t>(m.layers.size()));
    for (const Layer& l : m.layers) {
        detail::write_pod_m(os, static_cast<std::uint8_t>(l.kind));
        detail::write_pod_m(os, static_cast<std::int32_t>(l.in_channels));
        detail::write_pod_m(os, static_cast<std::int32_t>(l.out_channels));
        detail::write_pod_m(os, static_cast<std::int32_t>(l.kernel));
        if (l.has_params()) {
            detail::write_tensor(os, l.weight);
            detail::write_tensor(os, l.bias);
        }
    }
    detail::write_tensor(os, m.group_log_prob);
    detail::write_pod_m(os, static_cast<std::uint32_t>(m.global_log_prior.size()));
    os.write(reinterpret_cast<const char*>(m.global_log_prior.data()),
             static_cast<std::streamsize>(m.global_log_prior.size() * sizeof(double)));
    if (!os) throw FormatError("short write to " + path);
}

inline Model load_model(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kModelMagic, 4) != 0)
        throw FormatError("model container: bad magic in " + path);
    std::uint32_t version;
    detail::read_pod_m(is, version, "version");
    if (version != kModelVersion)
        throw FormatError("model container: unsupported version " + std::to_string(version));
    Model m;
    std::uint8_t kind, selector, grouping;
    detail::read_pod_m(is, kind, "kind");
    detail::read_pod_m(is, selector, "selector");
    detail::read_pod_m(is, grouping, "grouping");
    m.kind = static_cast<ModelKind>(kind);
    m.selector = static_cast<FeatureSelector>(selector);
    m.grouping = static_cast<StaticGrouping>(grouping);
    std::uint32_t classes, sig_rank;
    detail::read_pod_m(is, classes, "num_classes");
    m.num_classes = static_cast<int>(classes);
    detail::read_pod_m(is, sig_rank, "signature");
    m.input_signature.resize(sig_rank);
    for (std::uint32_t i = 0; i < sig_rank; ++i) {
        std::uint32_t d;
        detail::read_pod_m(is, d, "signature");
        m.input_signature[i] = d;
    }
    std::uint32_t layer_count;
    detail::read_pod_m(is, layer_count, "layer count");
    for (std::uint32_t i = 0; i < layer_count; ++i) {
        std::uint8_t lkind;
        std::int32_t in, out, kernel;
        detail::read_pod_m(is, lkind, "layer kind");
        detail::read_pod_m(is, in, "layer dims");
        detail::read_pod_m(is, out, "layer dims");
        detail::read_pod_m(is, kernel, "layer dims");
        Layer l;
        l.kind = static_cast<LayerKind>(lkind);
        l.in_channels = in;
        l.out_channels = out;
        l.kernel = kernel;
        if (l.has_params()) {
            l.weight = detail::read_tensor(is);
            l.bias = detail::read_tensor(is);
        }
        m.layers.push_back(std::move(l));
    }
    m.group_log_prob = detail::read_tensor(is);
    std::uint32_t prior_len;
    detail::read_pod_m(is, prior_len, "prior length");
    m.global_log_prior.resize(prior_len);
    is.read(reinterpret_cast<char*>(m.global_log_prior.data()),
            static_cast<std::streamsize>(prior_len * sizeof(double)));
    if (!is) throw FormatError("model container: truncated prior payload");
    is.peek();
    if (!is.eof()) throw FormatError("model container: trailing bytes in " + path);
    return m;
}

} // namespace ggd

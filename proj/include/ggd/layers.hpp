// Copyright (c) 2026 ggd contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "ggd/rng.hpp"
#include "ggd/tape.hpp"
#include "ggd/tensor.hpp"

namespace ggd {

// ChannelAffine is a learnable per-channel scale + shift. It stands in
// for batch normalization, keeping forward passes deterministic and free
// of cross-sample coupling while preserving the receptive field of 1x1
// convolution stacks.
enum class LayerKind : std::uint8_t {
    Linear = 0,
    ReLU = 1,
    Conv2D = 2,
    GlobalAvgPool = 3,
    ChannelAffine = 4,
};

inline const char* layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::Linear: return "Linear";
        case LayerKind::ReLU: return "ReLU";
        case LayerKind::Conv2D: return "Conv2D";
        case LayerKind::GlobalAvgPool: return "GlobalAvgPool";
        case LayerKind::ChannelAffine: return "ChannelAffine";
    }
    return "?";
}

/// One differentiable building block. Parameter shapes:
///   Linear        weight (in,out), bias (out)
///   Conv2D        weight (out,in,k,k), bias (out); stride 1, same padding
///   ChannelAffine weight (c) scale, bias (c) shift
/// ReLU and GlobalAvgPool carry no parameters.
struct Layer {
    LayerKind kind = LayerKind::ReLU;
    Tensor weight;
    Tensor bias;
    int in_channels = 0;
    int out_channels = 0;
    int kernel = 0;

    bool has_params() const {
        return kind == LayerKind::Linear || kind == LayerKind::Conv2D ||
               kind == LayerKind::ChannelAffine;
    }
};

inline Layer make_linear(int in, int out) {
    if (in <= 0 || out <= 0) throw ContractError("Linear: non-positive dimensions");
    Layer l;
    l.kind = LayerKind::Linear;
    l.in_channels = in;
    l.out_channels = out;
    l.weight = Tensor({static_cast<std::size_t>(in), static_cast<std::size_t>(out)});
    l.bias = Tensor({static_cast<std::size_t>(out)});
    return l;
}

inline Layer make_relu() {
    Layer l;
    l.kind = LayerKind::ReLU;
    return l;
}

inline Layer make_conv2d(int in, int out, int kernel) {
    if (in <= 0 || out <= 0) throw ContractError("Conv2D: non-positive channel counts");
    if (kernel != 1 && kernel != 3)
        throw ContractError("Conv2D: kernel must be 1 or 3, got " + std::to_string(kernel));
    Layer l;
    l.kind = LayerKind::Conv2D;
    l.in_channels = in;
    l.out_channels = out;
    l.kernel = kernel;
    l.weight = Tensor({static_cast<std::size_t>(out), static_cast<std::size_t>(in),
                       static_cast<std::size_t>(kernel), static_cast<std::size_t>(kernel)});
    l.bias = Tensor({static_cast<std::size_t>(out)});
    return l;
}

inline Layer make_global_avg_pool() {
    Layer l;
    l.kind = LayerKind::GlobalAvgPool;
    return l;
}

inline Layer make_channel_affine(int channels) {
    if (channels <= 0) throw ContractError("ChannelAffine: non-positive channel count");
    Layer l;
    l.kind = LayerKind::ChannelAffine;
    l.in_channels = channels;
    l.out_channels = channels;
    l.weight = Tensor::full({static_cast<std::size_t>(channels)}, 1.0);
    l.bias = Tensor({static_cast<std::size_t>(channels)});
    return l;
}

/// Glorot-uniform weights, zero biases. ChannelAffine resets to the
/// identity transform.
inline void init_layer(Layer& l, Rng& rng) {
    switch (l.kind) {
        case LayerKind::Linear: {
            double bound = std::sqrt(6.0 / (l.in_channels + l.out_channels));
            for (double& w : l.weight.data) w = rng.uniform(-bound, bound);
            std::fill(l.bias.data.begin(), l.bias.data.end(), 0.0);
            break;
        }
        case LayerKind::Conv2D: {
            double fan = static_cast<double>(l.kernel) * l.kernel;
            double bound = std::sqrt(6.0 / (fan * l.in_channels + fan * l.out_channels));
            for (double& w : l.weight.data) w = rng.uniform(-bound, bound);
            std::fill(l.bias.data.begin(), l.bias.data.end(), 0.0);
            break;
        }
        case LayerKind::ChannelAffine:
            std::fill(l.weight.data.begin(), l.weight.data.end(), 1.0);
            std::fill(l.bias.data.begin(), l.bias.data.end(), 0.0);
            break;
        default:
            break;
    }
}

namespace detail {

inline void check_rank(const Tensor& in, std::size_t rank, LayerKind k) {
    if (in.rank() != rank)
        throw DimensionError(std::string(layer_kind_name(k)) + ": expected rank " +
                             std::to_string(rank) + " input, got " + in.shape_str());
}

inline void check_axis(const Tensor& in, std::size_t axis, int expected, LayerKind k) {
    if (in.dim(axis) != static_cast<std::size_t>(expected))
        throw DimensionError(std::string(layer_kind_name(k)) + ": input axis " +
                             std::to_string(axis) + " has size " + std::to_string(in.dim(axis)) +
                             ", layer expects " + std::to_string(expected));
}

} // namespace detail

/// Applies `layer` to the tensor in `input_slot`, records the application,
/// and returns the output slot. The layer must outlive the tape. Shape
/// errors name the layer kind and the offending axis.
inline int apply_layer(Layer& layer, int input_slot, Tape& tape) {
    const Tensor& in = tape.value(input_slot);
    if (layer.has_params()) {
        tape.register_param(&layer.weight);
        tape.register_param(&layer.bias);
    }
    Layer* lp = &layer;
    const int out_slot = static_cast<int>(tape.node_count()); // index of the push below

    switch (layer.kind) {
        case LayerKind::Linear: {
            detail::check_rank(in, 2, layer.kind);
            detail::check_axis(in, 1, layer.in_channels, layer.kind);
            const std::size_t B = in.dim(0);
            const std::size_t IN = static_cast<std::size_t>(layer.in_channels);
            const std::size_t OUT = static_cast<std::size_t>(layer.out_channels);
            Tensor out({B, OUT});
            for (std::size_t b = 0; b < B; ++b) {
                const double* x = in.data.data() + b * IN;
                double* y = out.data.data() + b * OUT;
                for (std::size_t o = 0; o < OUT; ++o) y[o] = layer.bias.data[o];
                for (std::size_t i = 0; i < IN; ++i) {
                    const double xi = x[i];
                    const double* wrow = lp->weight.data.data() + i * OUT;
                    for (std::size_t o = 0; o < OUT; ++o) y[o] += xi * wrow[o];
                }
            }
            return tape.push(std::move(out), [lp, input_slot, out_slot, B, IN, OUT](Tape& t) {
                const std::vector<double>& gy = t.grad(out_slot);
                std::vector<double>& gx = t.grad(input_slot);
                const Tensor& x = t.value(input_slot);
                for (std::size_t b = 0; b < B; ++b) {
                    const double* gyb = gy.data() + b * OUT;
                    const double* xb = x.data.data() + b * IN;
                    double* gxb = gx.data() + b * IN;
                    for (std::size_t o = 0; o < OUT; ++o) lp->bias.grad[o] += gyb[o];
                    for (std::size_t i = 0; i < IN; ++i) {
                        const double* wrow = lp->weight.data.data() + i * OUT;
                        double* gwrow = lp->weight.grad.data() + i * OUT;
                        double acc = 0.0;
                        const double xi = xb[i];
                        for (std::size_t o = 0; o < OUT; ++o) {
                            acc += wrow[o] * gyb[o];
                            gwrow[o] += xi * gyb[o];
                        }
                        gxb[i] += acc;
                    }
                }
            });
        }

        case LayerKind::ReLU: {
            Tensor out = in;
            for (double& v : out.data) v = v > 0.0 ? v : 0.0;
            return tape.push(std::move(out), [input_slot, out_slot](Tape& t) {
                const std::vector<double>& gy = t.grad(out_slot);
                std::vector<double>& gx = t.grad(input_slot);
                const Tensor& x = t.value(input_slot);
                for (std::size_t i = 0; i < gy.size(); ++i)
                    if (x.data[i] > 0.0) gx[i] += gy[i];
            });
        }

        case LayerKind::Conv2D: {
            detail::check_rank(in, 4, layer.kind);
            detail::check_axis(in, 1, layer.in_channels, layer.kind);
            const std::size_t B = in.dim(0), C = in.dim(1), H = in.dim(2), W = in.dim(3);
            const std::size_t OC = static_cast<std::size_t>(layer.out_channels);
            const int K = layer.kernel, P = (layer.kernel - 1) / 2;
            Tensor out({B, OC, H, W});
            const std::size_t plane = H * W;
            for (std::size_t b = 0; b < B; ++b) {
                const double* xb = in.data.data() + b * C * plane;
                double* yb = out.data.data() + b * OC * plane;
                for (std::size_t oc = 0; oc < OC; ++oc) {
                    double* yp = yb + oc * plane;
                    const double bias = layer.bias.data[oc];
                    for (std::size_t i = 0; i < plane; ++i) yp[i] = bias;
                    for (std::size_t ic = 0; ic < C; ++ic) {
                        const double* xp = xb + ic * plane;
                        const double* wk = lp->weight.data.data() + (oc * C + ic) * K * K;
                        for (int ky = 0; ky < K; ++ky) {
                            const int dy = ky - P;
                            const std::size_t y0 = dy < 0 ? static_cast<std::size_t>(-dy) : 0;
                            const std::size_t y1 = H - (dy > 0 ? static_cast<std::size_t>(dy) : 0);
                            for (int kx = 0; kx < K; ++kx) {
                                const int dx = kx - P;
                                const double w = wk[ky * K + kx];
                                const std::size_t x0 = dx < 0 ? static_cast<std::size_t>(-dx) : 0;
                                const std::size_t x1 = W - (dx > 0 ? static_cast<std::size_t>(dx) : 0);
                                for (std::size_t y = y0; y < y1; ++y) {
                                    const double* src = xp + (y + static_cast<std::size_t>(static_cast<long>(dy))) * W;
                                    double* dst = yp + y * W;
                                    for (std::size_t x = x0; x < x1; ++x)
                                        dst[x] += w * src[x + static_cast<std::size_t>(static_cast<long>(dx))];
                                }
                            }
                        }
                    }
                }
            }
            return tape.push(std::move(out), [lp, input_slot, out_slot, B, C, H, W, OC, K, P](Tape& t) {
                const std::vector<double>& gy = t.grad(out_slot);
                std::vector<double>& gx = t.grad(input_slot);
                const Tensor& x = t.value(input_slot);
                const std::size_t plane = H * W;
                for (std::size_t b = 0; b < B; ++b) {
                    const double* xb = x.data.data() + b * C * plane;
                    const double* gyb = gy.data() + b * OC * plane;
                    double* gxb = gx.data() + b * C * plane;
                    for (std::size_t oc = 0; oc < OC; ++oc) {
                        const double* gyp = gyb + oc * plane;
                        double bacc = 0.0;
                        for (std::size_t i = 0; i < plane; ++i) bacc += gyp[i];
                        lp->bias.grad[oc] += bacc;
                        for (std::size_t ic = 0; ic < C; ++ic) {
                            const double* xp = xb + ic * plane;
                            double* gxp = gxb + ic * plane;
                            const double* wk = lp->weight.data.data() + (oc * C + ic) * K * K;
                            double* gwk = lp->weight.grad.data() + (oc * C + ic) * K * K;
                            for (int ky = 0; ky < K; ++ky) {
                                const int dy = ky - P;
                                const std::size_t y0 = dy < 0 ? static_cast<std::size_t>(-dy) : 0;
                                const std::size_t y1 = H - (dy > 0 ? static_cast<std::size_t>(dy) : 0);
                                for (int kx = 0; kx < K; ++kx) {
                                    const int dx = kx - P;
                                    const double w = wk[ky * K + kx];
                                    double wg = 0.0;
                                    const std::size_t x0 = dx < 0 ? static_cast<std::size_t>(-dx) : 0;
                                    const std::size_t x1 = W - (dx > 0 ? static_cast<std::size_t>(dx) : 0);
                                    for (std::size_t y = y0; y < y1; ++y) {
                                        const std::size_t sy = y + static_cast<std::size_t>(static_cast<long>(dy));
                                        const double* src = xp + sy * W;
                                        double* gsrc = gxp + sy * W;
                                        const double* grow = gyp + y * W;
                                        for (std::size_t xcol = x0; xcol < x1; ++xcol) {
                                            const std::size_t sx = xcol + static_cast<std::size_t>(static_cast<long>(dx));
                                            wg += src[sx] * grow[xcol];
                                            gsrc[sx] += w * grow[xcol];
                                        }
                                    }
                                    gwk[ky * K + kx] += wg;
                                }
                            }
                        }
                    }
                }
            });
        }

        case LayerKind::GlobalAvgPool: {
            detail::check_rank(in, 4, layer.kind);
            const std::size_t B = in.dim(0), C = in.dim(1), H = in.dim(2), W = in.dim(3);
            const std::size_t plane = H * W;
            Tensor out({B, C});
            for (std::size_t b = 0; b < B; ++b)
                for (std::size_t c = 0; c < C; ++c) {
                    const double* xp = in.data.data() + (b * C + c) * plane;
                    double s = 0.0;
                    for (std::size_t i = 0; i < plane; ++i) s += xp[i];
                    out.data[b * C + c] = s / static_cast<double>(plane);
                }
            return tape.push(std::move(out), [input_slot, out_slot, B, C, plane](Tape& t) {
                const std::vector<double>& gy = t.grad(out_slot);
                std::vector<double>& gx = t.grad(input_slot);
                for (std::size_t b = 0; b < B; ++b)
                    for (std::size_t c = 0; c < C; ++c) {
                        const double g = gy[b * C + c] / static_cast<double>(plane);
                        double* gxp = gx.data() + (b * C + c) * plane;
                        for (std::size_t i = 0; i < plane; ++i) gxp[i] += g;
                    }
            });
        }

        case LayerKind::ChannelAffine: {
            if (in.rank() != 2 && in.rank() != 4)
                throw DimensionError("ChannelAffine: expected rank 2 or 4 input, got " +
                                     in.shape_str());
            detail::check_axis(in, 1, layer.in_channels, layer.kind);
            const std::size_t B = in.dim(0), C = in.dim(1);
            const std::size_t plane = in.rank() == 4 ? in.dim(2) * in.dim(3) : 1;
            Tensor out = in;
            for (std::size_t b = 0; b < B; ++b)
                for (std::size_t c = 0; c < C; ++c) {
                    double* yp = out.data.data() + (b * C + c) * plane;
                    const double s = layer.weight.data[c], sh = layer.bias.data[c];
                    for (std::size_t i = 0; i < plane; ++i) yp[i] = s * yp[i] + sh;
                }
            return tape.push(std::move(out), [lp, input_slot, out_slot, B, C, plane](Tape& t) {
                const std::vector<double>& gy = t.grad(out_slot);
                std::vector<double>& gx = t.grad(input_slot);
                const Tensor& x = t.value(input_slot);
                for (std::size_t b = 0; b < B; ++b)
                    for (std::size_t c = 0; c < C; ++c) {
                        const std::size_t base = (b * C + c) * plane;
                        const double s = lp->weight.data[c];
                        double gs = 0.0, gsh = 0.0;
                        for (std::size_t i = 0; i < plane; ++i) {
                            const double g = gy[base + i];
                            gs += g * x.data[base + i];
                            gsh += g;
                            gx[base + i] += s * g;
                        }
                        lp->weight.grad[c] += gs;
                        lp->bias.grad[c] += gsh;
                    }
            });
        }
    }
    throw ContractError("apply_layer: unhandled layer kind");
}

} // namespace ggd

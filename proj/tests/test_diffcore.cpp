// Copyright (c) 2026 ggd contributors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include "ggd/data.hpp"
#include "ggd/gradcheck.hpp"
#include "ggd/layers.hpp"
#include "ggd/model.hpp"
#include "ggd/ops.hpp"
#include "ggd/rng.hpp"
#include "ggd/tape.hpp"

using namespace ggd;

namespace {

// Independent direct convolution: explicit taps with zero padding, no
// window arithmetic shared with the implementation.
Tensor conv_oracle(const Tensor& x, const Tensor& w, const Tensor& bias, int K) {
    const std::size_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const std::size_t OC = w.dim(0);
    const int P = (K - 1) / 2;
    Tensor out({B, OC, H, W});
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t oc = 0; oc < OC; ++oc)
            for (std::size_t y = 0; y < H; ++y)
                for (std::size_t xc = 0; xc < W; ++xc) {
                    double acc = bias.data[oc];
                    for (std::size_t ic = 0; ic < C; ++ic)
                        for (int ky = 0; ky < K; ++ky)
                            for (int kx = 0; kx < K; ++kx) {
                                const long iy = static_cast<long>(y) + ky - P;
                                const long ix = static_cast<long>(xc) + kx - P;
                                if (iy < 0 || ix < 0 || iy >= static_cast<long>(H) ||
                                    ix >= static_cast<long>(W))
                                    continue;
                                acc += x.data[((b * C + ic) * H + static_cast<std::size_t>(iy)) * W +
                                              static_cast<std::size_t>(ix)] *
                                       w.data[((oc * C + ic) * static_cast<std::size_t>(K) +
                                               static_cast<std::size_t>(ky)) *
                                                  static_cast<std::size_t>(K) +
                                              static_cast<std::size_t>(kx)];
                            }
                    out.data[((b * OC + oc) * H + y) * W + xc] = acc;
                }
    return out;
}

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    for (double& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

LabeledBatch batch_from(Tensor features, std::vector<int> labels, int num_classes) {
    LabeledBatch b;
    b.features = std::move(features);
    b.onehot = one_hot(labels, num_classes);
    b.labels = std::move(labels);
    b.bias_attr.assign(b.labels.size(), 0);
    return b;
}

// Forward-only replay of a layer stack for finite differencing.
double stack_ce(std::vector<Layer>& layers, const Tensor& input, const Tensor& targets) {
    Tape tape;
    int slot = tape.push_leaf(input);
    for (Layer& l : layers) slot = apply_layer(l, slot, tape);
    return cross_entropy_soft(tape.value(slot), targets);
}

double stack_fd_check(std::vector<Layer>& layers, const Tensor& input, const Tensor& targets,
                      double step) {
    GradCheckTarget target;
    for (Layer& l : layers)
        if (l.has_params()) {
            target.params.push_back(&l.weight);
            target.params.push_back(&l.bias);
        }
    target.loss = [&] { return stack_ce(layers, input, targets); };
    target.compute_grads = [&] {
        Tape tape;
        int slot = tape.push_leaf(input);
        for (Layer& l : layers) slot = apply_layer(l, slot, tape);
        tape.backward(cross_entropy_soft_node(tape, slot, targets));
    };
    return finite_diff_check(target, step);
}

} // namespace

TEST_CASE("tensor shape bookkeeping") {
    Tensor t({2, 3});
    REQUIRE(t.size() == 6);
    REQUIRE_THROWS_AS(Tensor({2, 2}, {1.0, 2.0, 3.0}), DimensionError);
    REQUIRE(t.all_finite());
    t.data[4] = std::nan("");
    REQUIRE_FALSE(t.all_finite());
}

TEST_CASE("relu and global average pooling definitions") {
    Tape tape;
    Layer relu = make_relu();
    int slot = tape.push_leaf(Tensor({1, 3}, {-1.0, 0.0, 2.0}));
    int out = apply_layer(relu, slot, tape);
    REQUIRE(tape.value(out).data == std::vector<double>{0.0, 0.0, 2.0});

    Layer gap = make_global_avg_pool();
    int img = tape.push_leaf(Tensor({1, 1, 2, 2}, {1.0, 2.0, 3.0, 4.0}));
    int pooled = apply_layer(gap, img, tape);
    REQUIRE(tape.value(pooled).data[0] == Catch::Approx(2.5).epsilon(0));
}

TEST_CASE("conv2d matches the direct convolution oracle") {
    SECTION("1x1 kernel doubling fixture") {
        Layer conv = make_conv2d(1, 1, 1);
        conv.weight.data = {2.0};
        conv.bias.data = {0.0};
        Tape tape;
        int in = tape.push_leaf(Tensor({1, 1, 2, 2}, {1.0, 2.0, 3.0, 4.0}));
        int out = apply_layer(conv, in, tape);
        const Tensor expect =
            conv_oracle(tape.value(in), conv.weight, conv.bias, 1);
        REQUIRE(tape.value(out).data == expect.data);
        REQUIRE(tape.value(out).data == std::vector<double>{2.0, 4.0, 6.0, 8.0});
    }
    SECTION("random 3x3 and 1x1 stacks against the oracle") {
        for (std::uint64_t seed = 0; seed < 4; ++seed) {
            Rng rng(seed);
            for (int k : {1, 3}) {
                Layer conv = make_conv2d(2, 3, k);
                init_layer(conv, rng);
                for (double& v : conv.bias.data) v = rng.uniform(-0.5, 0.5);
                Tensor x = random_tensor({2, 2, 5, 4}, rng);
                Tape tape;
                int in = tape.push_leaf(x);
                int out = apply_layer(conv, in, tape);
                const Tensor expect = conv_oracle(x, conv.weight, conv.bias, k);
                for (std::size_t i = 0; i < expect.size(); ++i)
                    REQUIRE(tape.value(out).data[i] == Catch::Approx(expect.data[i]).margin(1e-12));
            }
        }
    }
}

TEST_CASE("apply_layer rejects shape mismatches with a named axis") {
    Layer lin = make_linear(4, 2);
    Tape tape;
    int bad = tape.push_leaf(Tensor({2, 3}));
    REQUIRE_THROWS_WITH(apply_layer(lin, bad, tape),
                        Catch::Matchers::ContainsSubstring("Linear") &&
                            Catch::Matchers::ContainsSubstring("axis 1"));
    Layer conv = make_conv2d(3, 4, 3);
    int badc = tape.push_leaf(Tensor({1, 2, 5, 5}));
    REQUIRE_THROWS_AS(apply_layer(conv, badc, tape), DimensionError);
}

TEST_CASE("apply_layer is deterministic") {
    Rng rng(7);
    Layer conv = make_conv2d(2, 2, 3);
    init_layer(conv, rng);
    Tensor x = random_tensor({1, 2, 6, 6}, rng);
    Tape t1, t2;
    int o1 = apply_layer(conv, t1.push_leaf(x), t1);
    int o2 = apply_layer(conv, t2.push_leaf(x), t2);
    REQUIRE(t1.value(o1).data == t2.value(o2).data);
}

TEST_CASE("softmax values and stability") {
    const Tensor sym = softmax(Tensor({2}, {0.0, 0.0}));
    REQUIRE(sym.data[0] == Catch::Approx(0.5).margin(1e-15));

    const Tensor skew = softmax(Tensor({2}, {1000.0, 0.0}));
    REQUIRE(skew.data[0] == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(skew.data[1] == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(skew.data[1] > 0.0);

    // direct evaluation of e^z / sum e^z
    const Tensor t = softmax(Tensor({2}, {1.0, 0.0}));
    REQUIRE(t.data[0] == Catch::Approx(0.7310585786300049).margin(1e-15));
    REQUIRE(t.data[1] == Catch::Approx(0.2689414213699951).margin(1e-15));

    REQUIRE_THROWS_AS(softmax(Tensor({2}, {std::nan(""), 0.0})), NumericError);
}

TEST_CASE("softmax rows sum to one for any finite magnitude") {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const double scale = trial % 2 ? 1e3 : 5.0;
        Tensor z = random_tensor({4, 7}, rng, -scale, scale);
        const Tensor p = softmax(z);
        for (std::size_t r = 0; r < 4; ++r) {
            double sum = 0.0;
            for (std::size_t j = 0; j < 7; ++j) sum += p.data[r * 7 + j];
            REQUIRE(sum == Catch::Approx(1.0).margin(1e-12));
        }
    }
}

TEST_CASE("cross entropy with soft targets") {
    // -log softmax_0 of (1,0), worked by hand
    REQUIRE(cross_entropy_soft(Tensor({2}, {1.0, 0.0}), Tensor({2}, {1.0, 0.0})) ==
            Catch::Approx(0.3132616875182228).margin(1e-15));
    // zero weighting collapses the loss regardless of logits
    REQUIRE(cross_entropy_soft(Tensor({2}, {3.7, -2.0}), Tensor({2}, {0.0, 0.0})) == 0.0);
    // sub-stochastic target, direct evaluation: 0.9 * log 2
    REQUIRE(cross_entropy_soft(Tensor({2}, {0.0, 0.0}), Tensor({2}, {0.9, 0.0})) ==
            Catch::Approx(0.6238324625039508).margin(1e-15));
    REQUIRE_THROWS_AS(cross_entropy_soft(Tensor({2}, {0.0, 0.0}), Tensor({2}, {-0.1, 0.0})),
                      ContractError);
}

TEST_CASE("cross entropy is linear in the target weights") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        Tensor z = random_tensor({3, 5}, rng, -4.0, 4.0);
        Tensor w = random_tensor({3, 5}, rng, 0.0, 1.0);
        const double a = rng.uniform();
        Tensor aw = w;
        for (double& v : aw.data) v *= a;
        REQUIRE(cross_entropy_soft(z, aw) ==
                Catch::Approx(a * cross_entropy_soft(z, w)).margin(1e-12));
    }
}

TEST_CASE("backward basics") {
    SECTION("identity of a scalar leaf") {
        Tape tape;
        int leaf = tape.push_leaf(Tensor({1}, {3.0}));
        // record identity as a 1-node op
        const int out = static_cast<int>(tape.node_count());
        int id = tape.push(tape.value(leaf), [leaf, out](Tape& t) {
            t.grad(leaf)[0] += t.grad(out)[0];
        });
        tape.backward(id);
        REQUIRE(tape.grad(leaf)[0] == 1.0);
    }
    SECTION("sum of two leaves") {
        Tape tape;
        int a = tape.push_leaf(Tensor({1}, {1.0}));
        int b = tape.push_leaf(Tensor({1}, {2.0}));
        const int out = static_cast<int>(tape.node_count());
        int sum = tape.push(Tensor({1}, {3.0}), [a, b, out](Tape& t) {
            t.grad(a)[0] += t.grad(out)[0];
            t.grad(b)[0] += t.grad(out)[0];
        });
        tape.backward(sum);
        REQUIRE(tape.grad(a)[0] == 1.0);
        REQUIRE(tape.grad(b)[0] == 1.0);
    }
    SECTION("loss must be scalar") {
        Tape tape;
        int leaf = tape.push_leaf(Tensor({2}, {1.0, 2.0}));
        REQUIRE_THROWS_AS(tape.backward(leaf), ContractError);
    }
    SECTION("parameters off the loss path get zero gradient") {
        Layer used = make_linear(2, 2);
        Layer unused = make_linear(2, 2);
        Rng rng(5);
        init_layer(used, rng);
        init_layer(unused, rng);
        Tape tape;
        int in = tape.push_leaf(Tensor({1, 2}, {0.3, -0.2}));
        int out = apply_layer(used, in, tape);
        apply_layer(unused, in, tape); // recorded, not connected to the loss
        int loss = cross_entropy_soft_node(tape, out, Tensor({1, 2}, {1.0, 0.0}));
        tape.backward(loss);
        for (double g : unused.weight.grad) REQUIRE(g == 0.0);
        bool any = false;
        for (double g : used.weight.grad) any = any || g != 0.0;
        REQUIRE(any);
    }
}

TEST_CASE("backward matches central differences for a random 2-layer MLP") {
    Rng rng(13);
    Model mlp = build_mlp(6, {5}, 3);
    init_model(mlp, 13);
    Tensor features = random_tensor({4, 1, 1, 6}, rng);
    LabeledBatch batch = batch_from(std::move(features), {0, 2, 1, 0}, 3);
    REQUIRE(finite_diff_check(mlp, batch, 1e-5) < 1e-5);
}

TEST_CASE("backward matches central differences for every layer kind") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(seed);
        const std::size_t B = 2 + seed % 3;

        SECTION("seed " + std::to_string(seed)) {
            // Linear -> ReLU -> Linear
            {
                std::vector<Layer> stack{make_linear(5, 4), make_relu(), make_linear(4, 3)};
                for (Layer& l : stack) init_layer(l, rng);
                Tensor x = random_tensor({B, 5}, rng);
                std::vector<int> labels;
                for (std::size_t i = 0; i < B; ++i)
                    labels.push_back(static_cast<int>(rng.uniform_int(3)));
                REQUIRE(stack_fd_check(stack, x, one_hot(labels, 3), 1e-5) < 1e-5);
            }
            // Conv(k) -> ChannelAffine -> ReLU -> GAP -> Linear for both kernels
            for (int k : {1, 3}) {
                std::vector<Layer> stack{make_conv2d(2, 3, k), make_channel_affine(3),
                                         make_relu(), make_global_avg_pool(),
                                         make_linear(3, 4)};
                for (Layer& l : stack) init_layer(l, rng);
                // nudge affine off identity so its gradient paths are generic
                for (double& v : stack[1].weight.data) v = rng.uniform(0.5, 1.5);
                for (double& v : stack[1].bias.data) v = rng.uniform(-0.3, 0.3);
                Tensor x = random_tensor({B, 2, 4, 5}, rng);
                std::vector<int> labels;
                for (std::size_t i = 0; i < B; ++i)
                    labels.push_back(static_cast<int>(rng.uniform_int(4)));
                const Tensor targets = one_hot(labels, 4);
                REQUIRE(stack_fd_check(stack, x, targets, 1e-5) < 1e-5);
            }
        }
    }
}

TEST_CASE("finite_diff_check fixtures") {
    SECTION("a quadratic loss is exact under central differences") {
        Layer lin = make_linear(3, 2);
        Rng rng(2);
        init_layer(lin, rng);
        Tensor x = random_tensor({2, 3}, rng);
        GradCheckTarget target;
        target.params = {&lin.weight, &lin.bias};
        auto outputs = [&] {
            Tape tape;
            return Tensor(tape.value(apply_layer(lin, tape.push_leaf(x), tape)));
        };
        target.loss = [&] {
            const Tensor y = outputs();
            double s = 0.0;
            for (double v : y.data) s += v * v;
            return s;
        };
        target.compute_grads = [&] {
            // closed-form: d/dW sum y^2 = 2 x^T y, d/db = 2 sum_b y
            const Tensor y = outputs();
            lin.weight.zero_grad();
            lin.bias.zero_grad();
            for (std::size_t b = 0; b < 2; ++b)
                for (std::size_t i = 0; i < 3; ++i)
                    for (std::size_t o = 0; o < 2; ++o)
                        lin.weight.grad[i * 2 + o] += 2.0 * x.data[b * 3 + i] * y.data[b * 2 + o];
            for (std::size_t b = 0; b < 2; ++b)
                for (std::size_t o = 0; o < 2; ++o) lin.bias.grad[o] += 2.0 * y.data[b * 2 + o];
        };
        REQUIRE(finite_diff_check(target, 1e-3) < 1e-9);
    }
    SECTION("untrained SimpleNet-1k on a 4-sample batch") {
        // seed chosen so no ReLU preactivation sits exactly on the kink,
        // where central differences straddle two slopes
        Model net = build_simplenet(1, {4, 6}, 10);
        init_model(net, 1);
        Rng rng(1001);
        Tensor features = random_tensor({4, 3, 5, 5}, rng, 0.0, 1.0);
        LabeledBatch batch = batch_from(std::move(features), {0, 3, 7, 9}, 10);
        REQUIRE(finite_diff_check(net, batch, 1e-5) < 1e-5);
    }
    SECTION("a doubled gradient is detected at relative error one half") {
        Layer lin = make_linear(2, 1);
        lin.weight.data = {1.0, 1.0};
        Tensor x({1, 2}, {10.0, -7.0});
        GradCheckTarget target;
        target.params = {&lin.weight};
        target.loss = [&] {
            Tape tape;
            return tape.value(apply_layer(lin, tape.push_leaf(x), tape)).data[0];
        };
        target.compute_grads = [&] {
            lin.weight.zero_grad();
            lin.weight.grad[0] = 2.0 * x.data[0]; // planted fault: twice the true gradient
            lin.weight.grad[1] = 2.0 * x.data[1];
        };
        const double err = finite_diff_check(target, 1e-4);
        REQUIRE(err == Catch::Approx(0.5).margin(1e-6));
    }
    SECTION("parameter budget is enforced") {
        Model net = build_simplenet(3, {32, 64}, 10);
        init_model(net, 1);
        Rng rng(1);
        Tensor features = random_tensor({1, 3, 4, 4}, rng, 0.0, 1.0);
        LabeledBatch batch = batch_from(std::move(features), {0}, 10);
        REQUIRE(net.parameter_count() > 10000);
        REQUIRE_THROWS_AS(finite_diff_check(net, batch, 1e-5), ContractError);
    }
}

// Copyright (c) 2026 ggd contributors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include "ggd/generators.hpp"
#include "ggd/metrics.hpp"

using namespace ggd;

TEST_CASE("accuracy") {
    REQUIRE(accuracy({1, 2, 3}, {1, 2, 3}) == 1.0);
    REQUIRE(accuracy({1, 2, 3}, {4, 5, 6}) == 0.0);
    REQUIRE(accuracy({0, 1, 1, 2}, {0, 1, 2, 2}) == 0.75);
    REQUIRE_THROWS_AS(accuracy({}, {}), ContractError);

    const std::vector<double> pc = per_class_accuracy({0, 1, 1, 2}, {0, 1, 2, 2}, 3);
    REQUIRE(pc[0] == 1.0);
    REQUIRE(pc[1] == 1.0);
    REQUIRE(pc[2] == 0.5);
}

TEST_CASE("confusion matrices") {
    SECTION("perfect predictor is diagonal; trace equals accuracy") {
        const std::vector<int> labels{0, 1, 2, 1, 0};
        const ConfusionMatrix m = confusion(labels, labels, 3, ConfusionMatrix::Axis::VsLabel);
        REQUIRE(m.trace() == 5);
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                if (r != c) REQUIRE(m.at(r, c) == 0);
        REQUIRE(static_cast<double>(m.trace()) / static_cast<double>(m.total()) ==
                accuracy(labels, labels));
    }
    SECTION("predictions equal to the bias attribute fill the vs-bias diagonal") {
        const std::vector<int> bias{3, 1, 4, 1, 5};
        const ConfusionMatrix m = confusion(bias, bias, 6, ConfusionMatrix::Axis::VsBias);
        REQUIRE(m.trace() == m.total());
    }
    SECTION("hand-filled 4-sample fixture and row sums") {
        const std::vector<int> preds{0, 1, 1, 0};
        const std::vector<int> refs{0, 0, 1, 1};
        const ConfusionMatrix m = confusion(preds, refs, 2, ConfusionMatrix::Axis::VsLabel);
        REQUIRE(m.at(0, 0) == 1);
        REQUIRE(m.at(0, 1) == 1);
        REQUIRE(m.at(1, 0) == 1);
        REQUIRE(m.at(1, 1) == 1);
        REQUIRE(m.at(0, 0) + m.at(0, 1) == 2); // per-reference sample count
        const std::string csv = matrix_to_csv(m);
        REQUIRE(csv.find("label\\pred,0,1\n") == 0);
    }
    SECTION("out-of-range reference rejected") {
        REQUIRE_THROWS_AS(confusion({0}, {7}, 3, ConfusionMatrix::Axis::VsLabel), ContractError);
    }
}

TEST_CASE("hard_ratio") {
    REQUIRE(hard_ratio({1.0, 2.0}, {true, true}) == 1.0);
    REQUIRE(hard_ratio({1.0, 2.0}, {false, false}) == 0.0);
    REQUIRE(hard_ratio({1.0, 1.0, 2.0}, {false, false, true}) == 0.5);
    REQUIRE(hard_ratio({0.0, 0.0}, {true, false}) == 0.0);
    SECTION("invariant to uniform loss scaling") {
        const std::vector<double> losses{0.5, 1.25, 0.0, 3.0};
        const std::vector<bool> mask{true, false, true, true};
        std::vector<double> scaled = losses;
        for (double& v : scaled) v *= 7.3;
        REQUIRE(hard_ratio(losses, mask) == Catch::Approx(hard_ratio(scaled, mask)).margin(1e-15));
    }
}

TEST_CASE("grad_cosine") {
    REQUIRE(grad_cosine({1.0, 0.0}, {1.0, 0.0}) == 1.0);
    REQUIRE(grad_cosine({1.0, 0.0}, {0.0, 1.0}) == 0.0);
    REQUIRE(grad_cosine({1.0, 1.0}, {1.0, 0.0}) == Catch::Approx(0.7071067811865476).margin(1e-12));
    REQUIRE_THROWS_AS(grad_cosine({0.0, 0.0}, {1.0, 0.0}), ContractError);
    SECTION("scale invariance and symmetry") {
        const std::vector<double> g{0.3, -1.2, 0.7};
        std::vector<double> g2{0.9, -3.6, 2.1}; // 3g
        REQUIRE(grad_cosine(g, g2) == Catch::Approx(1.0).margin(1e-12));
        const std::vector<double> h{-0.4, 0.5, 2.0};
        REQUIRE(grad_cosine(g, h) == Catch::Approx(grad_cosine(h, g)).margin(1e-15));
    }
}

TEST_CASE("spearman") {
    REQUIRE(spearman({1.0, 2.0, 3.0}, {10.0, 20.0, 30.0}) == Catch::Approx(1.0));
    REQUIRE(spearman({1.0, 2.0, 3.0}, {3.0, 2.0, 1.0}) == Catch::Approx(-1.0));
    REQUIRE(spearman({1.0, 1.0, 1.0}, {3.0, 2.0, 1.0}) == 0.0); // constant input
}

TEST_CASE("pseudo_label_drift") {
    SECTION("zero ensemble: dataset-mean mass is (1 - 1/C) * prior exactly") {
        const std::vector<int> labels{0, 0, 0, 1};
        const Tensor y = one_hot(labels, 2);
        const DriftReport r = pseudo_label_drift(Tensor({4, 2}), y, {0.75, 0.25});
        REQUIRE(r.mass_share[0] == 0.5 * 0.75);
        REQUIRE(r.mass_share[1] == 0.5 * 0.25);
        // every sample receives the same supervision strength
        REQUIRE(r.per_class_mass[0] == Catch::Approx(0.5).margin(1e-15));
        REQUIRE(r.per_class_mass[1] == Catch::Approx(0.5).margin(1e-15));
    }
    SECTION("static prior on a 90/10 fixture inverts the supervision ranking") {
        std::vector<int> labels(90, 0);
        labels.insert(labels.end(), 10, 1);
        const Tensor y = one_hot(labels, 2);
        const Model prior_model = build_static_distribution_global(labels, 1e-6, 2);
        Tensor h({labels.size(), 2});
        for (std::size_t i = 0; i < labels.size(); ++i) {
            h.data[i * 2] = prior_model.group_log_prob.data[0];
            h.data[i * 2 + 1] = prior_model.group_log_prob.data[1];
        }
        const DriftReport r = pseudo_label_drift(h, y, {0.9, 0.1});
        REQUIRE(r.per_class_mass[0] < r.per_class_mass[1]); // majority gets less per sample
        REQUIRE(r.rank_correlation < 0.0);
    }
    SECTION("balanced prior and symmetric ensemble give equal masses") {
        const std::vector<int> labels{0, 1, 0, 1};
        const Tensor y = one_hot(labels, 2);
        Tensor h({4, 2});
        for (std::size_t i = 0; i < 4; ++i) {
            h.data[i * 2] = 0.3;
            h.data[i * 2 + 1] = 0.3;
        }
        const DriftReport r = pseudo_label_drift(h, y, {0.5, 0.5});
        REQUIRE(r.per_class_mass[0] == Catch::Approx(r.per_class_mass[1]).margin(1e-9));
        REQUIRE(r.mass_share[0] == Catch::Approx(r.mass_share[1]).margin(1e-9));
    }
}

TEST_CASE("evaluate_grid") {
    // constant predictor from a skewed global prior
    std::vector<int> skew(70, 2);
    skew.insert(skew.end(), 30, 0);
    const Model constant_model = build_static_distribution_global(skew, 1e-6, 3);

    BiasedDataset data;
    data.num_classes = 3;
    data.labels = {2, 2, 0, 1, 2, 0, 1, 2};
    data.bias_attr = std::vector<int>(8, 0);
    data.images = Tensor({8, 1, 1, 1});
    data.rho = 0.0;

    const std::map<std::string, const BiasedDataset*> grid{{"a", &data}, {"b", &data}};
    const auto acc = evaluate_grid(constant_model, grid);
    REQUIRE(acc.at("a") == Catch::Approx(0.5)); // class 2 frequency in the fixture
    REQUIRE(acc.at("a") == acc.at("b"));
}

// Copyright (c) 2026 ggd contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <vector>

#include "ggd/model.hpp"

namespace ggd {

enum class OptimizerKind : std::uint8_t { Sgd = 0, Adam = 1 };

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::Sgd;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// First-order updates over one model's parameter list. Adam keeps
/// per-entry moment buffers keyed by parameter order, which is stable for
/// the lifetime of a model. Models without parameters (the static
/// distribution tables) are untouched by construction.
class Optimizer {
public:
    explicit Optimizer(OptimizerConfig cfg = {}) : cfg_(cfg) {}

    const OptimizerConfig& config() const { return cfg_; }

    void step(std::vector<Tensor*> params) {
        ++t_;
        if (cfg_.kind == OptimizerKind::Sgd) {
            for (Tensor* p : params) {
                if (!p->has_grad()) continue;
                for (std::size_t i = 0; i < p->size(); ++i)
                    p->data[i] -= cfg_.learning_rate * p->grad[i];
            }
            return;
        }
        if (m_.size() != params.size()) {
            m_.resize(params.size());
            v_.resize(params.size());
            for (std::size_t pi = 0; pi < params.size(); ++pi) {
                m_[pi].assign(params[pi]->size(), 0.0);
                v_[pi].assign(params[pi]->size(), 0.0);
            }
        }
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (std::size_t pi = 0; pi < params.size(); ++pi) {
            Tensor* p = params[pi];
            if (!p->has_grad()) continue;
            for (std::size_t i = 0; i < p->size(); ++i) {
                const double g = p->grad[i];
                m_[pi][i] = cfg_.beta1 * m_[pi][i] + (1.0 - cfg_.beta1) * g;
                v_[pi][i] = cfg_.beta2 * v_[pi][i] + (1.0 - cfg_.beta2) * g * g;
                const double mhat = m_[pi][i] / bc1;
                const double vhat = v_[pi][i] / bc2;
                p->data[i] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.eps);
            }
        }
    }

private:
    OptimizerConfig cfg_;
    long t_ = 0;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
};

} // namespace ggd

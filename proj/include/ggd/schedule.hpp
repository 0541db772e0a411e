// Copyright (c) 2026 ggd contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>

#include "ggd/errors.hpp"

namespace ggd {

/// Regularizer weight schedule. SinAnneal traces sin(pi*t / (2T)): 0 at
/// t=0, 1 at t=T, non-decreasing in between. Granularity decides whether
/// t counts epochs or batches; the horizon T is the matching total count,
/// filled in by the trainer when left at 0.
struct LambdaSchedule {
    enum class Kind : std::uint8_t { Constant = 0, SinAnneal = 1 };
    enum class Granularity : std::uint8_t { Epoch = 0, Batch = 1 };

    Kind kind = Kind::SinAnneal;
    double value = 0.0; // Constant only
    double horizon = 0.0;
    Granularity granularity = Granularity::Epoch;

    static LambdaSchedule constant(double v) {
        if (v < 0.0 || v > 1.0) throw ContractError("LambdaSchedule: constant must be in [0,1]");
        LambdaSchedule s;
        s.kind = Kind::Constant;
        s.value = v;
        return s;
    }
    static LambdaSchedule sin_anneal(double horizon = 0.0) {
        LambdaSchedule s;
        s.horizon = horizon;
        return s;
    }
};

inline double lambda_value(const LambdaSchedule& s, double t) {
    if (s.kind == LambdaSchedule::Kind::Constant) return s.value;
    if (s.horizon <= 0.0) throw ContractError("lambda_value: schedule horizon not set");
    if (t < 0.0 || t > s.horizon) throw ContractError("lambda_value: t out of range [0, T]");
    return std::sin(1.5707963267948966 * t / s.horizon); // sin(pi/2 * t/T)
}

} // namespace ggd

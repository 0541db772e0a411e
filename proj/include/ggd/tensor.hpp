// Copyright (c) 2026 ggd contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "ggd/errors.hpp"

namespace ggd {

/// Dense row-major n-d array of doubles with an optional gradient buffer.
///
/// The gradient buffer is empty unless the tensor participates in a
/// backward pass as a parameter; when present it always matches data in
/// length.
class Tensor {
public:
    std::vector<std::size_t> shape;
    std::vector<double> data;
    std::vector<double> grad; // empty == absent

    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> s)
        : shape(std::move(s)), data(count_of(shape), 0.0) {}

    Tensor(std::vector<std::size_t> s, std::vector<double> d)
        : shape(std::move(s)), data(std::move(d)) {
        if (data.size() != count_of(shape)) {
            throw DimensionError("tensor data length " + std::to_string(data.size()) +
                                 " does not match shape product " +
                                 std::to_string(count_of(shape)));
        }
    }

    Tensor(std::initializer_list<std::size_t> s, std::initializer_list<double> d)
        : Tensor(std::vector<std::size_t>(s), std::vector<double>(d)) {}

    std::size_t size() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }

    std::size_t dim(std::size_t axis) const {
        if (axis >= shape.size()) {
            throw DimensionError("axis " + std::to_string(axis) + " out of rank " +
                                 std::to_string(shape.size()));
        }
        return shape[axis];
    }

    double& at(std::size_t i) { return data[i]; }
    double at(std::size_t i) const { return data[i]; }

    /// Allocates (or clears) the gradient buffer.
    void ensure_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
    }
    void zero_grad() {
        grad.assign(data.size(), 0.0);
    }
    bool has_grad() const { return grad.size() == data.size() && !data.empty(); }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    std::string shape_str() const {
        std::ostringstream os;
        os << '(';
        for (std::size_t i = 0; i < shape.size(); ++i) {
            if (i) os << ',';
            os << shape[i];
        }
        os << ')';
        return os.str();
    }

    static std::size_t count_of(const std::vector<std::size_t>& s) {
        std::size_t n = 1;
        for (std::size_t d : s) n *= d;
        return s.empty() ? 0 : n;
    }

    static Tensor zeros(std::vector<std::size_t> s) { return Tensor(std::move(s)); }

    static Tensor full(std::vector<std::size_t> s, double v) {
        Tensor t(std::move(s));
        std::fill(t.data.begin(), t.data.end(), v);
        return t;
    }
};

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (!a.same_shape(b)) {
        throw DimensionError(std::string(what) + ": shape mismatch " + a.shape_str() +
                             " vs " + b.shape_str());
    }
}

} // namespace ggd

// Copyright (c) 2026 ggd contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <functional>
#include <vector>

#include "ggd/tensor.hpp"

namespace ggd {

/// Records primitive applications for reverse-mode differentiation.
///
/// Every forward op pushes one slot holding its output value; backward
/// replays the slots in reverse, each node adding into the gradient
/// buffers of its inputs. Slots are appended in evaluation order, so the
/// tape is topologically ordered by construction. A tape belongs to one
/// forward pass; it is not thread safe and is meant to be rebuilt per
/// batch.
class Tape {
public:
    using BackFn = std::function<void(Tape&)>;

    /// Value that gradients do not flow past (network inputs, constants).
    int push_leaf(Tensor value) {
        values_.push_back(std::move(value));
        grads_.emplace_back();
        backs_.emplace_back();
        return static_cast<int>(values_.size()) - 1;
    }

    /// Result of a recorded op. The backward fn reads this slot's grad and
    /// accumulates into parent slots and/or registered parameter tensors.
    int push(Tensor value, BackFn back) {
        values_.push_back(std::move(value));
        grads_.emplace_back();
        backs_.push_back(std::move(back));
        return static_cast<int>(values_.size()) - 1;
    }

    /// Declares a parameter tensor touched by this pass so backward can
    /// zero-fill it, including parameters on no path to the loss.
    void register_param(Tensor* p) {
        if (std::find(params_.begin(), params_.end(), p) == params_.end())
            params_.push_back(p);
    }

    const Tensor& value(int slot) const { return values_[static_cast<std::size_t>(slot)]; }
    Tensor& value(int slot) { return values_[static_cast<std::size_t>(slot)]; }

    std::vector<double>& grad(int slot) { return grads_[static_cast<std::size_t>(slot)]; }

    std::size_t node_count() const { return values_.size(); }
    const std::vector<Tensor*>& params() const { return params_; }

    /// Propagates d(loss)/d(value) from a scalar loss slot into every
    /// parent slot and every registered parameter's grad buffer. Each
    /// recorded node is visited exactly once.
    void backward(int loss_slot) {
        if (loss_slot < 0 || static_cast<std::size_t>(loss_slot) >= values_.size())
            throw ContractError("backward: loss slot out of range");
        if (values_[static_cast<std::size_t>(loss_slot)].size() != 1)
            throw ContractError("backward: loss must be scalar, got shape " +
                                values_[static_cast<std::size_t>(loss_slot)].shape_str());
        for (std::size_t i = 0; i < values_.size(); ++i)
            grads_[i].assign(values_[i].size(), 0.0);
        for (Tensor* p : params_)
            p->zero_grad();
        grads_[static_cast<std::size_t>(loss_slot)][0] = 1.0;
        for (std::size_t i = values_.size(); i-- > 0;) {
            if (backs_[i]) backs_[i](*this);
        }
    }

private:
    std::vector<Tensor> values_;
    std::vector<std::vector<double>> grads_;
    std::vector<BackFn> backs_;
    std::vector<Tensor*> params_;
};

/// Free-function form matching the rest of the op vocabulary.
inline void backward(Tape& tape, int loss_slot) { tape.backward(loss_slot); }

} // namespace ggd

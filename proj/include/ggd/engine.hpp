// Copyright (c) 2026 ggd contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <string>
#include <vector>

#include "ggd/engine_ops.hpp"
#include "ggd/metriclog.hpp"
#include "ggd/metrics.hpp"
#include "ggd/optimizer.hpp"
#include "ggd/schedule.hpp"

namespace ggd {

enum class Scheme : std::uint8_t {
    GradientSupervision = 0,     // base trained on clipped negative gradients
    CurriculumRegularization = 1 // base trained on CE(f,Y) - lambda*CE(f,sigma_hat)
};

inline const char* scheme_name(Scheme s) {
    return s == Scheme::GradientSupervision ? "gs" : "cr";
}

struct StepLosses {
    std::vector<double> biased;
    double base = 0.0;
};

namespace detail {

/// Trains biased model m against the clipped negative gradient of the
/// ensemble so far; static models contribute logits but skip the update.
/// Shared by both schemes (Algorithm listings keep gradient supervision
/// for the biased models either way).
inline void update_biased_models(EnsembleState& ens, const LabeledBatch& batch,
                                 std::vector<Optimizer>& biased_opts, StepLosses& losses) {
    for (std::size_t m = 0; m < ens.size(); ++m) {
        const Tensor h_prev = ens.accumulated_logits(batch, m);
        const Tensor pseudo = clip_pseudo(negative_gradient(h_prev, batch.onehot), batch.onehot);
        Model& model = ens.biased[m];
        if (!model.trainable()) {
            losses.biased.push_back(cross_entropy_soft(forward_logits(model, batch), pseudo));
            continue;
        }
        Tape tape;
        const int logits = forward_on_tape(model, batch, tape);
        const int loss = cross_entropy_soft_node(tape, logits, pseudo);
        const double loss_value = tape.value(loss).data[0];
        tape.backward(loss);
        biased_opts[m].step(model.parameters());
        losses.biased.push_back(loss_value);
    }
}

} // namespace detail

/// One greedy gradient-supervision step: each biased model fits the
/// clipped negative gradient of the ensemble before it, then the base
/// model fits the clipped negative gradient of the full ensemble.
inline StepLosses gs_batch_step(EnsembleState& ens, Model& base, const LabeledBatch& batch,
                                std::vector<Optimizer>& biased_opts, Optimizer& base_opt) {
    if (batch.size() == 0) throw ContractError("gs_batch_step: empty batch");
    if (biased_opts.size() != ens.size())
        throw ContractError("gs_batch_step: need one optimizer per biased model");
    StepLosses losses;
    detail::update_biased_models(ens, batch, biased_opts, losses);

    const Tensor h_full = ens.accumulated_logits(batch, ens.size());
    const Tensor pseudo = clip_pseudo(negative_gradient(h_full, batch.onehot), batch.onehot);
    Tape tape;
    const int logits = forward_on_tape(base, batch, tape);
    const int loss = cross_entropy_soft_node(tape, logits, pseudo);
    losses.base = tape.value(loss).data[0];
    tape.backward(loss);
    base_opt.step(base.parameters());
    return losses;
}

/// One curriculum-regularization step: biased models update exactly as in
/// gs_batch_step; the base model minimizes CE(f,Y) - lambda*CE(f,sigma_hat)
/// with sigma_hat = Y o softmax(H_M).
inline StepLosses cr_batch_step(EnsembleState& ens, Model& base, const LabeledBatch& batch,
                                double lambda_t, std::vector<Optimizer>& biased_opts,
                                Optimizer& base_opt) {
    if (batch.size() == 0) throw ContractError("cr_batch_step: empty batch");
    if (lambda_t < 0.0 || lambda_t > 1.0)
        throw ContractError("cr_batch_step: lambda must be in [0,1]");
    if (biased_opts.size() != ens.size())
        throw ContractError("cr_batch_step: need one optimizer per biased model");
    StepLosses losses;
    detail::update_biased_models(ens, batch, biased_opts, losses);

    const Tensor h_full = ens.accumulated_logits(batch, ens.size());
    const Tensor sigma_hat = reference_prediction(h_full, batch.onehot);
    Tape tape;
    const int logits = forward_on_tape(base, batch, tape);
    const int ce_label = cross_entropy_soft_node(tape, logits, batch.onehot);
    const int ce_ref = cross_entropy_soft_node(tape, logits, sigma_hat);
    const int loss = combine_scalars_node(tape, ce_label, ce_ref, 1.0, -lambda_t);
    losses.base = tape.value(loss).data[0];
    tape.backward(loss);
    base_opt.step(base.parameters());
    return losses;
}

/// Per-sample CE losses of a model over a dataset (batched evaluation).
inline std::vector<double> per_sample_ce(const Model& model, const BiasedDataset& data,
                                         std::size_t batch_size = 512) {
    std::vector<double> out;
    out.reserve(data.size());
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < data.size(); start += batch_size) {
        idx.clear();
        for (std::size_t i = start; i < std::min(start + batch_size, data.size()); ++i)
            idx.push_back(i);
        const LabeledBatch batch = make_batch(data, idx);
        const Tensor logits = forward_logits(model, batch);
        const std::size_t C = logits.dim(1);
        std::vector<double> logp(C);
        for (std::size_t b = 0; b < batch.size(); ++b) {
            detail::log_softmax_row(logits.data.data() + b * C, logp.data(), C);
            out.push_back(-logp[static_cast<std::size_t>(batch.labels[b])]);
        }
    }
    return out;
}

struct TrainOptions {
    Scheme scheme = Scheme::CurriculumRegularization;
    LambdaSchedule schedule = LambdaSchedule::sin_anneal();
    OptimizerConfig optimizer;
    int epochs = 10;
    int batch_size = 256;
    std::uint64_t seed = 0;
    double divergence_threshold = 1e6;
    std::size_t eval_batch_size = 512;
};

struct TrainResult {
    Model base;
    EnsembleState ensemble;
    MetricLog log;
};

namespace detail {

inline void check_divergence(const StepLosses& losses, long step, const char* scheme,
                             double threshold) {
    for (std::size_t m = 0; m < losses.biased.size(); ++m)
        if (!std::isfinite(losses.biased[m]) || std::abs(losses.biased[m]) > threshold)
            throw DivergenceError(std::string("training diverged at step ") +
                                  std::to_string(step) + " (" + scheme + "): biased model " +
                                  std::to_string(m) + " loss " + std::to_string(losses.biased[m]));
    if (!std::isfinite(losses.base) || std::abs(losses.base) > threshold)
        throw DivergenceError(std::string("training diverged at step ") + std::to_string(step) +
                              " (" + scheme + "): base model loss " +
                              std::to_string(losses.base));
}

} // namespace detail

/// Full training loop of the greedy de-bias schemes: per-epoch seeded
/// shuffling, the configured batch step, held-out evaluation at each
/// epoch end. Only the base model is the returned predictor; the biased
/// ensemble exists to absorb the spurious correlations during training.
inline TrainResult train(Model base, EnsembleState ensemble, const BiasedDataset& train_data,
                         const std::map<std::string, const BiasedDataset*>& eval_grid,
                         const TrainOptions& opts) {
    train_data.validate();
    if (opts.epochs < 1 || opts.batch_size < 1)
        throw ContractError("train: epochs and batch size must be positive");
    if (opts.optimizer.learning_rate <= 0.0)
        throw ContractError("train: learning rate must be positive");

    const std::uint64_t shuffle_seed = sub_seed(opts.seed, "shuffle");
    const std::size_t n = train_data.size();
    const long steps_per_epoch =
        static_cast<long>((n + static_cast<std::size_t>(opts.batch_size) - 1) /
                          static_cast<std::size_t>(opts.batch_size));

    LambdaSchedule schedule = opts.schedule;
    if (schedule.horizon <= 0.0)
        schedule.horizon = schedule.granularity == LambdaSchedule::Granularity::Epoch
                               ? static_cast<double>(opts.epochs)
                               : static_cast<double>(steps_per_epoch * opts.epochs);

    std::vector<Optimizer> biased_opts(ensemble.size(), Optimizer(opts.optimizer));
    Optimizer base_opt(opts.optimizer);

    MetricLog log(opts.seed);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    std::vector<bool> hard_mask(n);
    for (std::size_t i = 0; i < n; ++i) hard_mask[i] = train_data.bias_attr[i] != train_data.labels[i];

    long global_step = 0;
    for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
        Rng shuffler(mix_seed(shuffle_seed, static_cast<std::uint64_t>(epoch)));
        shuffler.shuffle(order);

        double lambda_t = 0.0;
        if (schedule.granularity == LambdaSchedule::Granularity::Epoch)
            lambda_t = lambda_value(schedule, static_cast<double>(epoch));

        std::vector<double> loss_sums(ensemble.size() + 1, 0.0);
        std::vector<std::size_t> batch_idx;
        for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(opts.batch_size)) {
            batch_idx.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                             order.begin() + static_cast<std::ptrdiff_t>(std::min(
                                                 start + static_cast<std::size_t>(opts.batch_size), n)));
            const LabeledBatch batch = make_batch(train_data, batch_idx);
            ++global_step;
            if (schedule.granularity == LambdaSchedule::Granularity::Batch)
                lambda_t = lambda_value(schedule, static_cast<double>(global_step));

            StepLosses losses;
            if (opts.scheme == Scheme::GradientSupervision)
                losses = gs_batch_step(ensemble, base, batch, biased_opts, base_opt);
            else
                losses = cr_batch_step(ensemble, base, batch, lambda_t, biased_opts, base_opt);
            detail::check_divergence(losses, global_step, scheme_name(opts.scheme),
                                     opts.divergence_threshold);
            for (std::size_t m = 0; m < losses.biased.size(); ++m) loss_sums[m] += losses.biased[m];
            loss_sums[ensemble.size()] += losses.base;
        }

        const double inv_steps = 1.0 / static_cast<double>(steps_per_epoch);
        for (std::size_t m = 0; m < ensemble.size(); ++m)
            log.add(epoch, "train", "loss/biased_" + std::to_string(m), loss_sums[m] * inv_steps);
        log.add(epoch, "train", "loss/base", loss_sums[ensemble.size()] * inv_steps);
        log.add(epoch, "train", "lambda", lambda_t);

        const std::vector<double> sample_losses = per_sample_ce(base, train_data, opts.eval_batch_size);
        log.add(epoch, "train", "hard_ratio", hard_ratio(sample_losses, hard_mask));

        for (const auto& [split, data] : eval_grid) {
            double correct = 0.0, total = 0.0;
            std::vector<std::size_t> idx;
            for (std::size_t start = 0; start < data->size(); start += opts.eval_batch_size) {
                idx.clear();
                for (std::size_t i = start; i < std::min(start + opts.eval_batch_size, data->size()); ++i)
                    idx.push_back(i);
                const LabeledBatch b = make_batch(*data, idx);
                const std::vector<int> preds = predict_classes(base, b);
                for (std::size_t i = 0; i < preds.size(); ++i)
                    if (preds[i] == b.labels[i]) correct += 1.0;
                total += static_cast<double>(preds.size());
            }
            log.add(epoch, split, "accuracy", correct / total);
        }
    }

    return TrainResult{std::move(base), std::move(ensemble), std::move(log)};
}

} // namespace ggd

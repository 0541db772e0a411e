// Copyright (c) 2026 ggd contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ggd/engine.hpp"
#include "ggd/errors.hpp"

namespace ggd {

inline constexpr int kConfigSpecVersion = 1;

/// One model entry of a run configuration.
struct ModelSpec {
    std::string arch; // simplenet | mlp | background | static_distribution | self_ensemble
    int kernel = 3;
    std::vector<int> channels;
    std::vector<int> hidden;
    int hidden_width = 16;
    double epsilon = 1.0;
    StaticGrouping grouping = StaticGrouping::Global;
};

/// Full experiment description, parsed from strict JSON: any unknown key
/// is an error so sweep typos die loudly.
struct RunConfig {
    std::string name = "run";
    std::uint64_t seed = 0;
    Scheme scheme = Scheme::CurriculumRegularization;
    LambdaSchedule schedule = LambdaSchedule::sin_anneal();
    OptimizerConfig optimizer = {OptimizerKind::Adam, 1e-3};
    int epochs = 10;
    int batch_size = 256;
    ModelSpec base_model;
    std::vector<ModelSpec> biased_models;
    std::string train_path;
    std::map<std::string, std::string> test_grid;
    std::string out_dir;
};

namespace detail {

inline void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                       const std::string& context) {
    if (!j.is_object()) throw ConfigError(context + " must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) {
                ok = true;
                break;
            }
        if (!ok) throw ConfigError("unknown key \"" + key + "\" in " + context);
    }
}

inline ModelSpec parse_model_spec(const nlohmann::json& j, const std::string& context) {
    check_keys(j, {"arch", "kernel", "channels", "hidden", "epsilon", "grouping"}, context);
    if (!j.contains("arch")) throw ConfigError(context + ": missing \"arch\"");
    ModelSpec s;
    s.arch = j.at("arch").get<std::string>();
    if (s.arch == "simplenet") {
        s.kernel = j.value("kernel", 3);
        s.channels = j.value("channels", std::vector<int>{16, 32, 64, 128});
        if (s.kernel != 1 && s.kernel != 3)
            throw ConfigError(context + ": kernel must be 1 or 3");
    } else if (s.arch == "mlp") {
        s.hidden = j.value("hidden", std::vector<int>{16});
    } else if (s.arch == "background") {
        if (j.contains("hidden")) {
            if (j.at("hidden").is_array())
                throw ConfigError(context + ": background takes a scalar hidden width");
            s.hidden_width = j.at("hidden").get<int>();
        }
    } else if (s.arch == "static_distribution") {
        s.epsilon = j.value("epsilon", 1.0);
        if (s.epsilon <= 0.0) throw ConfigError(context + ": epsilon must be > 0");
        const std::string g = j.value("grouping", std::string("global"));
        if (g == "global")
            s.grouping = StaticGrouping::Global;
        else if (g == "bias_attr")
            s.grouping = StaticGrouping::BiasAttr;
        else
            throw ConfigError(context + ": grouping must be \"global\" or \"bias_attr\"");
    } else if (s.arch == "self_ensemble") {
        // clones the base architecture; nothing further to parse
    } else {
        throw ConfigError(context + ": unknown arch \"" + s.arch + "\"");
    }
    return s;
}

} // namespace detail

inline RunConfig parse_run_config(const nlohmann::json& j) {
    detail::check_keys(j,
                       {"spec_version", "name", "seed", "scheme", "lambda", "lambda_granularity",
                        "optimizer", "base_model", "biased_models", "data", "out"},
                       "run config");
    if (!j.contains("spec_version")) throw ConfigError("run config: missing \"spec_version\"");
    if (j.at("spec_version").get<int>() != kConfigSpecVersion)
        throw ConfigError("run config: unsupported spec_version");

    RunConfig c;
    c.name = j.value("name", std::string("run"));
    c.seed = j.value("seed", std::uint64_t{0});

    const std::string scheme = j.value("scheme", std::string("cr"));
    if (scheme == "gs")
        c.scheme = Scheme::GradientSupervision;
    else if (scheme == "cr")
        c.scheme = Scheme::CurriculumRegularization;
    else
        throw ConfigError("run config: scheme must be \"gs\" or \"cr\"");

    if (j.contains("lambda")) {
        const auto& l = j.at("lambda");
        detail::check_keys(l, {"kind", "value"}, "lambda");
        const std::string kind = l.value("kind", std::string("sin_anneal"));
        if (kind == "constant")
            c.schedule = LambdaSchedule::constant(l.value("value", 0.0));
        else if (kind == "sin_anneal")
            c.schedule = LambdaSchedule::sin_anneal();
        else
            throw ConfigError("lambda: kind must be \"constant\" or \"sin_anneal\"");
    }
    const std::string gran = j.value("lambda_granularity", std::string("epoch"));
    if (gran == "epoch")
        c.schedule.granularity = LambdaSchedule::Granularity::Epoch;
    else if (gran == "batch")
        c.schedule.granularity = LambdaSchedule::Granularity::Batch;
    else
        throw ConfigError("run config: lambda_granularity must be \"epoch\" or \"batch\"");

    if (j.contains("optimizer")) {
        const auto& o = j.at("optimizer");
        detail::check_keys(o, {"kind", "learning_rate", "batch_size", "epochs"}, "optimizer");
        const std::string kind = o.value("kind", std::string("sgd"));
        if (kind == "sgd")
            c.optimizer.kind = OptimizerKind::Sgd;
        else if (kind == "adam")
            c.optimizer.kind = OptimizerKind::Adam;
        else
            throw ConfigError("optimizer: kind must be \"sgd\" or \"adam\"");
        c.optimizer.learning_rate = o.value("learning_rate", 1e-3);
        c.batch_size = o.value("batch_size", 256);
        c.epochs = o.value("epochs", 10);
        if (c.optimizer.learning_rate <= 0.0)
            throw ConfigError("optimizer: learning_rate must be > 0");
        if (c.batch_size < 1) throw ConfigError("optimizer: batch_size must be >= 1");
        if (c.epochs < 1) throw ConfigError("optimizer: epochs must be >= 1");
    }

    if (!j.contains("base_model")) throw ConfigError("run config: missing \"base_model\"");
    c.base_model = detail::parse_model_spec(j.at("base_model"), "base_model");
    if (c.base_model.arch == "self_ensemble" || c.base_model.arch == "static_distribution")
        throw ConfigError("base_model: must be a trainable standalone architecture");

    if (j.contains("biased_models")) {
        const auto& bm = j.at("biased_models");
        if (bm.is_string()) {
            // preset: distribution bias first, then a self-ensemble clone
            if (bm.get<std::string>() != "d_se")
                throw ConfigError("biased_models: unknown preset \"" + bm.get<std::string>() +
                                  "\"");
            ModelSpec d;
            d.arch = "static_distribution";
            ModelSpec se;
            se.arch = "self_ensemble";
            c.biased_models = {d, se};
        } else if (bm.is_array()) {
            int i = 0;
            for (const auto& m : bm)
                c.biased_models.push_back(
                    detail::parse_model_spec(m, "biased_models[" + std::to_string(i++) + "]"));
        } else {
            throw ConfigError("biased_models: must be an array or a preset string");
        }
    }

    if (!j.contains("data")) throw ConfigError("run config: missing \"data\"");
    const auto& d = j.at("data");
    detail::check_keys(d, {"train", "test_grid"}, "data");
    if (!d.contains("train")) throw ConfigError("data: missing \"train\"");
    c.train_path = d.at("train").get<std::string>();
    if (d.contains("test_grid"))
        for (const auto& [name, path] : d.at("test_grid").items())
            c.test_grid[name] = path.get<std::string>();

    if (!j.contains("out")) throw ConfigError("run config: missing \"out\"");
    c.out_dir = j.at("out").get<std::string>();
    return c;
}

/// Parses a config file; JSON syntax errors surface with the line and
/// byte position nlohmann reports.
inline RunConfig load_run_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config " + path);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config " + path + ": " + e.what());
    }
    return parse_run_config(j);
}

/// Materializes the configured models against the training data. The
/// base model is initialized first so self-ensemble entries can clone its
/// architecture.
inline Model build_from_spec(const ModelSpec& spec, const BiasedDataset& train,
                             const Model& base_for_clone, std::uint64_t init_seed) {
    const int in_channels = static_cast<int>(train.images.dim(1));
    if (spec.arch == "simplenet") {
        Model m = build_simplenet(spec.kernel, spec.channels, train.num_classes, in_channels);
        init_model(m, init_seed);
        return m;
    }
    if (spec.arch == "mlp") {
        const int dim = static_cast<int>(train.images.dim(1) * train.images.dim(2) *
                                         train.images.dim(3));
        Model m = build_mlp(dim, spec.hidden, train.num_classes);
        init_model(m, init_seed);
        return m;
    }
    if (spec.arch == "background") {
        Model m = build_background_model(train.num_classes, spec.hidden_width);
        init_model(m, init_seed);
        return m;
    }
    if (spec.arch == "static_distribution") {
        if (spec.grouping == StaticGrouping::Global)
            return build_static_distribution_global(train.labels, spec.epsilon,
                                                    train.num_classes);
        return build_static_distribution(train.labels, train.bias_attr, spec.epsilon,
                                         train.num_classes, StaticGrouping::BiasAttr);
    }
    if (spec.arch == "self_ensemble") return clone_architecture(base_for_clone, init_seed);
    throw ConfigError("unknown arch \"" + spec.arch + "\"");
}

} // namespace ggd

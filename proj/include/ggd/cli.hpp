// Copyright (c) 2026 ggd contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ggd/config.hpp"
#include "ggd/dataset_io.hpp"
#include "ggd/digits.hpp"
#include "ggd/engine.hpp"
#include "ggd/generators.hpp"
#include "ggd/idx.hpp"
#include "ggd/log.hpp"

namespace ggd {

struct GenDigitsArgs {
    std::size_t count = 10000;
    std::uint64_t seed = 0;
    std::size_t canvas = 14;
    std::string out_images;
    std::string out_labels;
};

struct GenBiasedMnistArgs {
    std::string idx_images;
    std::string idx_labels;
    double rho = 0.99;
    std::uint64_t seed = 0;
    std::string out;
    std::string palette_path; // optional JSON file of 10 RGB triples
};

struct GenSyntheticArgs {
    std::size_t n = 1000;
    int d_core = 8;
    int d_bias = 10;
    double rho = 0.9;
    int classes = 10;
    std::uint64_t seed = 0;
    std::string out;
};

struct GenLongTailArgs {
    std::string idx_images;
    std::string idx_labels;
    double mu = 0.1;
    int head_count = 1000;
    std::uint64_t seed = 0;
    std::string out;
};

struct TrainArgs {
    std::string config_path;
    std::string out_override;
};

struct EvalArgs {
    std::string model_path;
    std::vector<std::string> data; // name=path pairs
    std::string out;
};

struct ReportArgs {
    std::vector<std::string> runs;
    std::string out;
};

struct CliCommand {
    enum class Kind {
        None,
        GenDigits,
        GenBiasedMnist,
        GenSynthetic,
        GenLongTail,
        Train,
        Eval,
        Report
    };
    Kind kind = Kind::None;
    GenDigitsArgs gen_digits;
    GenBiasedMnistArgs gen_biased_mnist;
    GenSyntheticArgs gen_synthetic;
    GenLongTailArgs gen_long_tail;
    TrainArgs train;
    EvalArgs eval;
    ReportArgs report;
};

/// Raised when --help was requested; carries the help text.
struct HelpRequested {
    std::string text;
};

namespace detail {

inline void configure_app(CLI::App& app, CliCommand& cmd) {
    app.require_subcommand(1);
    const auto rho_check = CLI::Validator(
        [](std::string& s) -> std::string {
            double v = 0.0;
            try {
                v = std::stod(s);
            } catch (...) {
                return std::string("rho must be a number");
            }
            if (v < 0.0 || v > 1.0) return std::string("rho must be in [0,1]");
            return {};
        },
        "RHO", "rho range");

    CLI::App* gd = app.add_subcommand("gen-digits", "Render a synthetic digit corpus as IDX files");
    gd->add_option("--count", cmd.gen_digits.count, "number of images");
    gd->add_option("--seed", cmd.gen_digits.seed, "generation seed");
    gd->add_option("--canvas", cmd.gen_digits.canvas, "square canvas side (>= 12)");
    gd->add_option("--out-images", cmd.gen_digits.out_images, "IDX image file to write")
        ->required();
    gd->add_option("--out-labels", cmd.gen_digits.out_labels, "IDX label file to write")
        ->required();
    gd->callback([&cmd] { cmd.kind = CliCommand::Kind::GenDigits; });

    CLI::App* gb = app.add_subcommand("gen-biased-mnist",
                                      "Colorize IDX digits with a label-correlated background");
    gb->add_option("--idx-images", cmd.gen_biased_mnist.idx_images, "source IDX images")
        ->required();
    gb->add_option("--idx-labels", cmd.gen_biased_mnist.idx_labels, "source IDX labels")
        ->required();
    gb->add_option("--rho", cmd.gen_biased_mnist.rho, "spurious-correlation level")
        ->required()
        ->check(rho_check);
    gb->add_option("--seed", cmd.gen_biased_mnist.seed, "generation seed");
    gb->add_option("--palette", cmd.gen_biased_mnist.palette_path,
                   "JSON file with 10 RGB triples (defaults to the built-in palette)");
    gb->add_option("--out", cmd.gen_biased_mnist.out, "output directory")->required();
    gb->callback([&cmd] { cmd.kind = CliCommand::Kind::GenBiasedMnist; });

    CLI::App* gs = app.add_subcommand("gen-synthetic",
                                      "Gaussian-core + bias-coded flat-vector dataset");
    gs->add_option("--n", cmd.gen_synthetic.n, "sample count");
    gs->add_option("--d-core", cmd.gen_synthetic.d_core, "core feature dimensions");
    gs->add_option("--d-bias", cmd.gen_synthetic.d_bias, "bias feature dimensions");
    gs->add_option("--rho", cmd.gen_synthetic.rho, "spurious-correlation level")
        ->check(rho_check);
    gs->add_option("--classes", cmd.gen_synthetic.classes, "class count");
    gs->add_option("--seed", cmd.gen_synthetic.seed, "generation seed");
    gs->add_option("--out", cmd.gen_synthetic.out, "output directory")->required();
    gs->callback([&cmd] { cmd.kind = CliCommand::Kind::GenSynthetic; });

    CLI::App* gl = app.add_subcommand("gen-long-tail",
                                      "Exponential long-tailed subsample of IDX digits");
    gl->add_option("--idx-images", cmd.gen_long_tail.idx_images, "source IDX images")->required();
    gl->add_option("--idx-labels", cmd.gen_long_tail.idx_labels, "source IDX labels")->required();
    gl->add_option("--mu", cmd.gen_long_tail.mu, "imbalance factor in (0,1]")->required();
    gl->add_option("--head-count", cmd.gen_long_tail.head_count, "samples kept for class 0")
        ->required();
    gl->add_option("--seed", cmd.gen_long_tail.seed, "generation seed");
    gl->add_option("--out", cmd.gen_long_tail.out, "output directory")->required();
    gl->callback([&cmd] { cmd.kind = CliCommand::Kind::GenLongTail; });

    CLI::App* tr = app.add_subcommand("train", "Train from a declarative JSON run config");
    tr->add_option("--config", cmd.train.config_path, "run config JSON")->required();
    tr->add_option("--out", cmd.train.out_override, "override the config output directory");
    tr->callback([&cmd] { cmd.kind = CliCommand::Kind::Train; });

    CLI::App* ev = app.add_subcommand("eval", "Evaluate a checkpoint over named datasets");
    ev->add_option("--model", cmd.eval.model_path, "model checkpoint")->required();
    ev->add_option("--data", cmd.eval.data, "name=dataset.ggdd pairs")->required();
    ev->add_option("--out", cmd.eval.out, "output directory")->required();
    ev->callback([&cmd] { cmd.kind = CliCommand::Kind::Eval; });

    CLI::App* rp = app.add_subcommand("report", "Collate run summaries into one CSV");
    rp->add_option("--run", cmd.report.runs, "run output directory (repeatable)")->required();
    rp->add_option("--out", cmd.report.out, "CSV file to write")->required();
    rp->callback([&cmd] { cmd.kind = CliCommand::Kind::Report; });
}

} // namespace detail

/// Parses argv (without the program name). Throws ConfigError on usage
/// problems and HelpRequested when help was asked for.
inline CliCommand parse_args(std::vector<std::string> args) {
    CliCommand cmd;
    CLI::App app{"greedy de-bias training toolkit", "ggd"};
    detail::configure_app(app, cmd);
    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::CallForHelp&) {
        throw HelpRequested{app.help()};
    } catch (const CLI::ParseError& e) {
        std::string sub;
        for (const CLI::App* s : app.get_subcommands())
            sub = s->get_name();
        throw ConfigError(std::string(e.what()) +
                          (sub.empty() ? std::string() : " (in " + sub + ")"));
    }
    return cmd;
}

namespace detail {

/// Stages output under a .partial suffix and renames on success, so an
/// interrupted command leaves only flagged partial artifacts behind.
template <typename WriteFn>
void write_artifact(const std::string& path, WriteFn&& fn) {
    const std::string tmp = path + ".partial";
    fn(tmp);
    std::filesystem::rename(tmp, path);
}

inline Palette load_palette(const std::string& path) {
    if (path.empty()) return default_palette();
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open palette " + path);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("palette " + path + ": " + e.what());
    }
    if (!j.is_array() || j.size() != 10)
        throw ConfigError("palette must be an array of exactly 10 RGB triples");
    Palette p;
    for (std::size_t i = 0; i < 10; ++i) {
        if (!j[i].is_array() || j[i].size() != 3)
            throw ConfigError("palette entry " + std::to_string(i) + " must be an RGB triple");
        for (std::size_t c = 0; c < 3; ++c) p[i][c] = j[i][c].get<double>();
    }
    return p;
}

inline void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir + ": " + ec.message());
}

inline std::string dataset_out_path(const std::string& out_dir) {
    ensure_dir(out_dir);
    return (std::filesystem::path(out_dir) / "dataset.ggdd").string();
}

inline int run_gen_digits(const GenDigitsArgs& a) {
    DigitRenderOptions opt;
    opt.canvas = a.canvas;
    const RawDataset d = render_digits(a.count, a.seed, opt);
    write_artifact(a.out_images,
                   [&](const std::string& p) { write_file_bytes(p, encode_idx_images(d.images)); });
    write_artifact(a.out_labels,
                   [&](const std::string& p) { write_file_bytes(p, encode_idx_labels(d.labels)); });
    log_info("wrote " + std::to_string(a.count) + " digits to " + a.out_images);
    return 0;
}

inline int run_gen_biased_mnist(const GenBiasedMnistArgs& a) {
    const RawDataset raw = read_idx(a.idx_images, a.idx_labels);
    const BiasedDataset d = colorize(raw, a.rho, load_palette(a.palette_path), a.seed);
    const std::string path = dataset_out_path(a.out);
    write_artifact(path, [&](const std::string& p) { save_dataset(p, d); });
    log_info("wrote " + path + " (N=" + std::to_string(d.size()) +
             ", rho=" + std::to_string(a.rho) + ")");
    return 0;
}

inline int run_gen_synthetic(const GenSyntheticArgs& a) {
    const BiasedDataset d =
        synthetic_spurious(a.n, a.d_core, a.d_bias, a.rho, a.classes, a.seed);
    const std::string path = dataset_out_path(a.out);
    write_artifact(path, [&](const std::string& p) { save_dataset(p, d); });
    log_info("wrote " + path);
    return 0;
}

inline int run_gen_long_tail(const GenLongTailArgs& a) {
    const RawDataset raw = read_idx(a.idx_images, a.idx_labels);
    const BiasedDataset d = make_long_tailed(raw, LongTailSpec{a.mu, a.head_count}, a.seed);
    const std::string path = dataset_out_path(a.out);
    write_artifact(path, [&](const std::string& p) { save_dataset(p, d); });
    log_info("wrote " + path + " (N=" + std::to_string(d.size()) + ")");
    return 0;
}

inline nlohmann::json summary_from(const RunConfig& cfg, const TrainResult& result) {
    nlohmann::json s;
    s["spec_version"] = kConfigSpecVersion;
    s["name"] = cfg.name;
    s["scheme"] = scheme_name(cfg.scheme);
    s["seed"] = cfg.seed;
    s["epochs"] = cfg.epochs;
    s["lambda"] = cfg.schedule.kind == LambdaSchedule::Kind::Constant
                      ? "constant:" + std::to_string(cfg.schedule.value)
                      : std::string("sin_anneal");
    nlohmann::json finals = nlohmann::json::object();
    for (const auto& [split, _] : cfg.test_grid) {
        double v = 0.0;
        if (result.log.last_value(split, "accuracy", v)) finals[split] = v;
    }
    s["final_accuracy"] = finals;
    double rh = 0.0;
    if (result.log.last_value("train", "hard_ratio", rh)) s["final_hard_ratio"] = rh;
    double base_loss = 0.0;
    if (result.log.last_value("train", "loss/base", base_loss)) s["final_base_loss"] = base_loss;
    return s;
}

inline int run_train(const TrainArgs& a) {
    RunConfig cfg = load_run_config(a.config_path);
    if (!a.out_override.empty()) cfg.out_dir = a.out_override;
    ensure_dir(cfg.out_dir);

    const BiasedDataset train_data = load_dataset(cfg.train_path);
    std::vector<BiasedDataset> grid_storage;
    std::map<std::string, const BiasedDataset*> grid;
    grid_storage.reserve(cfg.test_grid.size());
    for (const auto& [name, path] : cfg.test_grid) {
        grid_storage.push_back(load_dataset(path));
        grid[name] = &grid_storage.back();
    }

    const std::uint64_t init_seed = sub_seed(cfg.seed, "init");
    Model base = build_from_spec(cfg.base_model, train_data, Model{}, mix_seed(init_seed, 0));
    EnsembleState ens;
    for (std::size_t m = 0; m < cfg.biased_models.size(); ++m)
        ens.biased.push_back(
            build_from_spec(cfg.biased_models[m], train_data, base, mix_seed(init_seed, m + 1)));

    TrainOptions opts;
    opts.scheme = cfg.scheme;
    opts.schedule = cfg.schedule;
    opts.optimizer = cfg.optimizer;
    opts.epochs = cfg.epochs;
    opts.batch_size = cfg.batch_size;
    opts.seed = cfg.seed;
    log_info("training " + cfg.name + " (" + scheme_name(cfg.scheme) + ", " +
             std::to_string(cfg.epochs) + " epochs, " + std::to_string(train_data.size()) +
             " samples, M=" + std::to_string(ens.size()) + ")");
    const TrainResult result = train(std::move(base), std::move(ens), train_data, grid, opts);

    const std::filesystem::path out(cfg.out_dir);
    write_artifact((out / "model.ggdm").string(),
                   [&](const std::string& p) { save_model(p, result.base); });
    write_artifact((out / "metrics.jsonl").string(),
                   [&](const std::string& p) { result.log.write_jsonl(p); });
    write_artifact((out / "summary.json").string(), [&](const std::string& p) {
        std::ofstream os(p, std::ios::binary | std::ios::trunc);
        if (!os) throw FormatError("cannot open " + p + " for writing");
        os << summary_from(cfg, result).dump(2) << '\n';
    });
    log_info("run artifacts in " + cfg.out_dir);
    return 0;
}

inline int run_eval(const EvalArgs& a) {
    const Model model = load_model(a.model_path);
    ensure_dir(a.out);
    std::vector<std::pair<std::string, BiasedDataset>> datasets;
    for (const std::string& spec : a.data) {
        const std::size_t eq = spec.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size())
            throw ConfigError("--data expects name=path, got \"" + spec + "\"");
        datasets.emplace_back(spec.substr(0, eq), load_dataset(spec.substr(eq + 1)));
    }
    std::string csv = "dataset,accuracy\n";
    for (const auto& [name, data] : datasets) {
        const LabeledBatch batch = full_batch(data);
        const std::vector<int> preds = predict_classes(model, batch);
        csv += name + "," + std::to_string(accuracy(preds, batch.labels)) + "\n";
        const ConfusionMatrix vs_label =
            confusion(preds, batch.labels, data.num_classes, ConfusionMatrix::Axis::VsLabel);
        const ConfusionMatrix vs_bias =
            confusion(preds, batch.bias_attr, data.num_classes, ConfusionMatrix::Axis::VsBias);
        const std::filesystem::path out(a.out);
        write_artifact((out / ("confusion_label_" + name + ".csv")).string(),
                       [&](const std::string& p) {
                           std::ofstream os(p, std::ios::binary | std::ios::trunc);
                           os << matrix_to_csv(vs_label);
                       });
        write_artifact((out / ("confusion_bias_" + name + ".csv")).string(),
                       [&](const std::string& p) {
                           std::ofstream os(p, std::ios::binary | std::ios::trunc);
                           os << matrix_to_csv(vs_bias);
                       });
    }
    write_artifact((std::filesystem::path(a.out) / "grid.csv").string(),
                   [&](const std::string& p) {
                       std::ofstream os(p, std::ios::binary | std::ios::trunc);
                       os << csv;
                   });
    return 0;
}

inline int run_report(const ReportArgs& a) {
    std::vector<std::pair<std::string, nlohmann::json>> summaries;
    std::set<std::string> cells;
    for (const std::string& dir : a.runs) {
        const std::filesystem::path p = std::filesystem::path(dir) / "summary.json";
        std::ifstream is(p);
        if (!is) {
            log_info("skipping " + dir + ": no summary.json (run incomplete?)");
            continue;
        }
        nlohmann::json j;
        try {
            is >> j;
        } catch (const nlohmann::json::parse_error& e) {
            throw FormatError(p.string() + ": " + e.what());
        }
        for (const auto& [cell, _] : j.at("final_accuracy").items()) cells.insert(cell);
        summaries.emplace_back(j.value("name", dir), std::move(j));
    }
    if (summaries.empty()) throw DataError("report: no complete runs found");

    std::string csv = "method";
    for (const std::string& c : cells) csv += "," + c;
    csv += "\n";
    for (const auto& [name, j] : summaries) {
        csv += name;
        for (const std::string& c : cells) {
            csv += ",";
            if (j.at("final_accuracy").contains(c))
                csv += std::to_string(j.at("final_accuracy").at(c).get<double>());
        }
        csv += "\n";
    }
    write_artifact(a.out, [&](const std::string& p) {
        std::ofstream os(p, std::ios::binary | std::ios::trunc);
        if (!os) throw FormatError("cannot open " + p + " for writing");
        os << csv;
    });
    return 0;
}

} // namespace detail

/// Executes a parsed command. Throws library errors on failure; partial
/// outputs keep their .partial suffix.
inline int run(const CliCommand& cmd) {
    switch (cmd.kind) {
        case CliCommand::Kind::GenDigits: return detail::run_gen_digits(cmd.gen_digits);
        case CliCommand::Kind::GenBiasedMnist:
            return detail::run_gen_biased_mnist(cmd.gen_biased_mnist);
        case CliCommand::Kind::GenSynthetic: return detail::run_gen_synthetic(cmd.gen_synthetic);
        case CliCommand::Kind::GenLongTail: return detail::run_gen_long_tail(cmd.gen_long_tail);
        case CliCommand::Kind::Train: return detail::run_train(cmd.train);
        case CliCommand::Kind::Eval: return detail::run_eval(cmd.eval);
        case CliCommand::Kind::Report: return detail::run_report(cmd.report);
        case CliCommand::Kind::None: break;
    }
    throw ContractError("no command selected");
}

inline int cli_main(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    try {
        return run(parse_args(std::move(args)));
    } catch (const HelpRequested& h) {
        std::cout << h.text;
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

} // namespace ggd

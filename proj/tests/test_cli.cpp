// Copyright (c) 2026 ggd contributors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>

#include "ggd/cli.hpp"

using namespace ggd;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("ggd_cli_" + std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str(const std::string& rel) const { return (path / rel).string(); }
};

void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    os << text;
}

std::string read_text(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    REQUIRE(is.good());
    return std::string(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
}

} // namespace

TEST_CASE("argument parsing") {
    SECTION("gen-biased-mnist parse echo") {
        const CliCommand cmd = parse_args({"gen-biased-mnist", "--idx-images", "p1", "--idx-labels",
                                           "p2", "--rho", "0.99", "--seed", "0", "--out", "d/"});
        REQUIRE(cmd.kind == CliCommand::Kind::GenBiasedMnist);
        REQUIRE(cmd.gen_biased_mnist.idx_images == "p1");
        REQUIRE(cmd.gen_biased_mnist.idx_labels == "p2");
        REQUIRE(cmd.gen_biased_mnist.rho == 0.99);
        REQUIRE(cmd.gen_biased_mnist.seed == 0);
        REQUIRE(cmd.gen_biased_mnist.out == "d/");
    }
    SECTION("help is not an error") {
        REQUIRE_THROWS_AS(parse_args({"--help"}), HelpRequested);
        try {
            parse_args({"--help"});
        } catch (const HelpRequested& h) {
            REQUIRE(h.text.find("gen-biased-mnist") != std::string::npos);
        }
    }
    SECTION("unknown flags are rejected") {
        REQUIRE_THROWS_AS(parse_args({"train", "--config", "x.json", "--frobnicate"}),
                          ConfigError);
    }
    SECTION("missing required flag is a usage error") {
        REQUIRE_THROWS_AS(parse_args({"gen-biased-mnist", "--rho", "0.5"}), ConfigError);
    }
    SECTION("rho range is validated with a named message") {
        REQUIRE_THROWS_WITH(parse_args({"gen-biased-mnist", "--idx-images", "a", "--idx-labels",
                                        "b", "--rho", "1.5", "--out", "d/"}),
                            Catch::Matchers::ContainsSubstring("rho must be in [0,1]"));
    }
}

TEST_CASE("run config validation") {
    TempDir tmp;
    SECTION("malformed JSON names the position") {
        write_text(tmp.str("bad.json"), "{\n  \"spec_version\": 1,\n  oops\n}\n");
        try {
            load_run_config(tmp.str("bad.json"));
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            REQUIRE(std::string(e.what()).find("line") != std::string::npos);
        }
    }
    SECTION("unknown keys are rejected") {
        write_text(tmp.str("typo.json"), R"({
            "spec_version": 1,
            "seed": 0,
            "scheme": "cr",
            "optimzer": {"kind": "adam"},
            "base_model": {"arch": "mlp"},
            "data": {"train": "x"},
            "out": "y"
        })");
        REQUIRE_THROWS_WITH(load_run_config(tmp.str("typo.json")),
                            Catch::Matchers::ContainsSubstring("optimzer"));
    }
    SECTION("preset biased model list expands in order") {
        write_text(tmp.str("preset.json"), R"({
            "spec_version": 1,
            "scheme": "gs",
            "base_model": {"arch": "mlp", "hidden": [8]},
            "biased_models": "d_se",
            "data": {"train": "x"},
            "out": "y"
        })");
        const RunConfig cfg = load_run_config(tmp.str("preset.json"));
        REQUIRE(cfg.biased_models.size() == 2);
        REQUIRE(cfg.biased_models[0].arch == "static_distribution");
        REQUIRE(cfg.biased_models[1].arch == "self_ensemble");
    }
}

TEST_CASE("full pipeline on the synthetic generator") {
    const auto started = std::chrono::steady_clock::now();
    TempDir tmp;

    // generate train + held-out data
    CliCommand gen;
    gen.kind = CliCommand::Kind::GenSynthetic;
    gen.gen_synthetic = {400, 6, 10, 0.95, 10, 1, tmp.str("train")};
    REQUIRE(run(gen) == 0);
    gen.gen_synthetic = {200, 6, 10, 0.1, 10, 2, tmp.str("test0")};
    REQUIRE(run(gen) == 0);

    const std::string config = R"({
        "spec_version": 1,
        "name": "NAME",
        "seed": 5,
        "scheme": "cr",
        "lambda": {"kind": "sin_anneal"},
        "optimizer": {"kind": "adam", "learning_rate": 0.005, "batch_size": 64, "epochs": 4},
        "base_model": {"arch": "mlp", "hidden": [12]},
        "biased_models": [{"arch": "static_distribution", "grouping": "global"}],
        "data": {"train": "TRAIN", "test_grid": {"unbiased": "TEST"}},
        "out": "OUT"
    })";
    auto instantiate = [&](const std::string& name, const std::string& out) {
        std::string c = config;
        c.replace(c.find("NAME"), 4, name);
        c.replace(c.find("TRAIN"), 5, tmp.str("train/dataset.ggdd"));
        c.replace(c.find("TEST"), 4, tmp.str("test0/dataset.ggdd"));
        c.replace(c.find("OUT"), 3, tmp.str(out));
        write_text(tmp.str(name + ".json"), c);
    };
    instantiate("runA", "outA");
    instantiate("runB", "outB");

    CliCommand train_cmd;
    train_cmd.kind = CliCommand::Kind::Train;
    train_cmd.train.config_path = tmp.str("runA.json");
    REQUIRE(run(train_cmd) == 0);
    REQUIRE(fs::exists(tmp.str("outA/model.ggdm")));
    REQUIRE(fs::exists(tmp.str("outA/metrics.jsonl")));
    REQUIRE(fs::exists(tmp.str("outA/summary.json")));

    SECTION("rerun with the same config and seed is byte-identical") {
        const std::string first = read_text(tmp.str("outA/metrics.jsonl"));
        REQUIRE(run(train_cmd) == 0);
        REQUIRE(read_text(tmp.str("outA/metrics.jsonl")) == first);
    }
    SECTION("eval and a two-run report") {
        train_cmd.train.config_path = tmp.str("runB.json");
        REQUIRE(run(train_cmd) == 0);

        CliCommand eval_cmd;
        eval_cmd.kind = CliCommand::Kind::Eval;
        eval_cmd.eval.model_path = tmp.str("outA/model.ggdm");
        eval_cmd.eval.data = {"unbiased=" + tmp.str("test0/dataset.ggdd")};
        eval_cmd.eval.out = tmp.str("evalA");
        REQUIRE(run(eval_cmd) == 0);
        const std::string grid = read_text(tmp.str("evalA/grid.csv"));
        REQUIRE(grid.find("dataset,accuracy") == 0);
        REQUIRE(grid.find("unbiased,") != std::string::npos);
        REQUIRE(fs::exists(tmp.str("evalA/confusion_label_unbiased.csv")));
        REQUIRE(fs::exists(tmp.str("evalA/confusion_bias_unbiased.csv")));

        CliCommand report_cmd;
        report_cmd.kind = CliCommand::Kind::Report;
        report_cmd.report.runs = {tmp.str("outA"), tmp.str("outB")};
        report_cmd.report.out = tmp.str("table.csv");
        REQUIRE(run(report_cmd) == 0);
        const std::string table = read_text(tmp.str("table.csv"));
        REQUIRE(table.find("method,unbiased") == 0);
        REQUIRE(table.find("runA,") != std::string::npos);
        REQUIRE(table.find("runB,") != std::string::npos);
    }
    SECTION("report skips incomplete runs instead of failing") {
        fs::create_directories(tmp.str("half_done"));
        CliCommand report_cmd;
        report_cmd.kind = CliCommand::Kind::Report;
        report_cmd.report.runs = {tmp.str("outA"), tmp.str("half_done")};
        report_cmd.report.out = tmp.str("partial_table.csv");
        REQUIRE(run(report_cmd) == 0);
        REQUIRE(read_text(tmp.str("partial_table.csv")).find("runA,") != std::string::npos);
    }

    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    REQUIRE(elapsed < 60.0);
}

TEST_CASE("inputs are never mutated by generation") {
    TempDir tmp;
    CliCommand gd;
    gd.kind = CliCommand::Kind::GenDigits;
    gd.gen_digits = {64, 3, 14, tmp.str("img.idx"), tmp.str("lbl.idx")};
    REQUIRE(run(gd) == 0);
    const std::string img_before = read_text(tmp.str("img.idx"));

    CliCommand gb;
    gb.kind = CliCommand::Kind::GenBiasedMnist;
    gb.gen_biased_mnist.idx_images = tmp.str("img.idx");
    gb.gen_biased_mnist.idx_labels = tmp.str("lbl.idx");
    gb.gen_biased_mnist.rho = 0.5;
    gb.gen_biased_mnist.seed = 9;
    gb.gen_biased_mnist.out = tmp.str("colored");
    REQUIRE(run(gb) == 0);
    REQUIRE(read_text(tmp.str("img.idx")) == img_before);
    REQUIRE(fs::exists(tmp.str("colored/dataset.ggdd")));
}

TEST_CASE("failed commands do not leave unflagged artifacts") {
    TempDir tmp;
    CliCommand train_cmd;
    train_cmd.kind = CliCommand::Kind::Train;
    write_text(tmp.str("cfg.json"), R"({
        "spec_version": 1,
        "base_model": {"arch": "mlp"},
        "data": {"train": ")" + tmp.str("missing.ggdd") + R"("},
        "out": ")" + tmp.str("out") + R"("
    })");
    train_cmd.train.config_path = tmp.str("cfg.json");
    REQUIRE_THROWS_AS(run(train_cmd), FormatError);
    REQUIRE_FALSE(fs::exists(tmp.str("out/model.ggdm")));
    REQUIRE_FALSE(fs::exists(tmp.str("out/metrics.jsonl")));
}

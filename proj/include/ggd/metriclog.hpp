// Copyright (c) 2026 ggd contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ggd/errors.hpp"

namespace ggd {

/// Ordered run telemetry: (epoch, split, metric, payload) records, each
/// carrying the run seed. Serialized as line-delimited JSON plus a final
/// summary document.
class MetricLog {
public:
    struct Record {
        int epoch = 0;
        std::string split;
        std::string metric;
        double value = 0.0;
        std::vector<std::vector<double>> matrix; // empty unless matrix-valued
        std::uint64_t seed = 0;
    };

    explicit MetricLog(std::uint64_t run_seed = 0) : seed_(run_seed) {}

    std::uint64_t seed() const { return seed_; }
    const std::vector<Record>& records() const { return records_; }

    void add(int epoch, const std::string& split, const std::string& metric, double value) {
        check_epoch(epoch);
        records_.push_back({epoch, split, metric, value, {}, seed_});
    }

    void add_matrix(int epoch, const std::string& split, const std::string& metric,
                    std::vector<std::vector<double>> payload) {
        check_epoch(epoch);
        records_.push_back({epoch, split, metric, 0.0, std::move(payload), seed_});
    }

    /// Last value recorded under (split, metric), if any.
    bool last_value(const std::string& split, const std::string& metric, double& out) const {
        for (auto it = records_.rbegin(); it != records_.rend(); ++it)
            if (it->split == split && it->metric == metric && it->matrix.empty()) {
                out = it->value;
                return true;
            }
        return false;
    }

    std::string to_jsonl() const {
        std::string out;
        for (const Record& r : records_) {
            nlohmann::json j;
            j["epoch"] = r.epoch;
            j["split"] = r.split;
            j["metric"] = r.metric;
            if (r.matrix.empty())
                j["value"] = r.value;
            else
                j["value"] = r.matrix;
            j["seed"] = r.seed;
            out += j.dump();
            out += '\n';
        }
        return out;
    }

    void write_jsonl(const std::string& path) const {
        std::ofstream os(path, std::ios::binary | std::ios::trunc);
        if (!os) throw FormatError("cannot open " + path + " for writing");
        const std::string body = to_jsonl();
        os.write(body.data(), static_cast<std::streamsize>(body.size()));
        if (!os) throw FormatError("short write to " + path);
    }

private:
    void check_epoch(int epoch) const {
        if (!records_.empty() && epoch < records_.back().epoch)
            throw ContractError("MetricLog: epochs must be non-decreasing");
    }

    std::uint64_t seed_;
    std::vector<Record> records_;
};

} // namespace ggd

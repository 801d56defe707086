/*
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fenshses/code_store.hpp"
#include "fenshses/search_engine.hpp"

namespace fenshses {

struct SyntheticModel {
    enum class Kind { uniform, clustered };
    Kind kind = Kind::uniform;
    /// Clustered only: columns per cluster and the per-bit flip probability
    /// applied to each member's copy of the cluster's base bit.
    uint32_t block = 4;
    double flip = 0.05;

    static SyntheticModel uniform() {
        return {};
    }
    static SyntheticModel clustered(uint32_t block, double flip) {
        return {Kind::clustered, block, flip};
    }
};

/// Deterministic given the seed. The clustered model groups columns into
/// clusters of near-duplicates and scatters each cluster's columns over
/// random positions. Throws InvalidArgument for bad parameters.
CodeDataset generate_synthetic(size_t n, uint32_t m, const SyntheticModel& model, uint64_t seed);

struct BenchConfig {
    std::string dataset_path;  // FBIN or text; synthetic when empty
    size_t n = 500000;
    uint32_t m = 128;
    SyntheticModel model;
    size_t query_count = 1000;
    std::vector<uint32_t> radii{5, 10, 15, 20};
    std::vector<SearchStrategy> strategies{kAllStrategies.begin(), kAllStrategies.end()};
    uint64_t seed = 1;
    uint32_t warmup = 3;
    uint32_t filter_width = 16;
    std::string permutation_path;  // reuse a saved permutation instead of running KL
    std::string output_path;
    std::string csv_path;
    bool throughput = false;
};

/// Reads a JSON config file. Unknown keys are rejected.
BenchConfig load_bench_config(const std::filesystem::path& path);
BenchConfig parse_bench_config(const std::string& json_text);

struct CellStats {
    SearchStrategy strategy;
    uint32_t radius;
    double mean_us = 0;
    double stddev_us = 0;
    double median_us = 0;
    double p95_us = 0;
    double mean_candidate_fraction = 0;
    std::vector<double> samples_us;
    std::vector<size_t> candidate_counts;
};

struct ThroughputStats {
    SearchStrategy strategy;
    uint32_t radius;
    int threads;
    double qps;
};

struct BenchReport {
    static constexpr int kSchemaVersion = 1;
    std::map<std::string, std::string> environment;
    size_t n = 0;
    uint32_t m = 0;
    uint32_t filter_segments = 0;
    uint32_t filter_width = 0;
    size_t query_count = 0;
    std::vector<CellStats> cells;
    std::vector<ThroughputStats> throughput;

    const CellStats* find(SearchStrategy s, uint32_t radius) const;
};

/// Summary statistics over raw samples; exposed for tests.
CellStats summarize(SearchStrategy s, uint32_t radius, std::vector<double> samples_us,
                    std::vector<size_t> candidate_counts, size_t n);

using EngineFactory = std::function<SearchEngine(std::shared_ptr<const CodeDataset>, const BenchConfig&)>;

/// Builds exactly the structures the configured strategies need.
SearchEngine default_engine_factory(std::shared_ptr<const CodeDataset> ds, const BenchConfig& cfg);

/// Runs warmups, then timed queries (strategies interleaved per query in
/// rotating order), checking that all strategies agree. Throws CorrectnessError on the first
/// disagreement. Writes the report/CSV if the config names output paths.
BenchReport run_bench(const BenchConfig& cfg, const EngineFactory& factory = default_engine_factory);

/// Same, over a dataset and engine the caller already has.
BenchReport run_bench(const BenchConfig& cfg, const SearchEngine& engine);

std::string report_to_json(const BenchReport& report, int indent = 2);
BenchReport report_from_json(const std::string& text);
void write_report(const BenchReport& report, const std::filesystem::path& path);
BenchReport load_report(const std::filesystem::path& path);
/// One row per raw sample: strategy,radius,query,latency_us,candidates.
void write_samples_csv(const BenchReport& report, const std::filesystem::path& path);

/// Mean latency against radius, one line per strategy, log-scale y axis.
std::string render_latency_svg(const BenchReport& report, const std::string& title = "");

}  // namespace fenshses

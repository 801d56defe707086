/*
 * SPDX-License-Identifier: Apache-2.0
 */

#include "fenshses/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "byte_io.hpp"
#include "fenshses/error.hpp"
#include "json.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fenshses {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

void write_text(const std::filesystem::path& path, const std::string& s) {
    detail::write_file_synced(path, std::span(reinterpret_cast<const uint8_t*>(s.data()), s.size()));
}

std::vector<size_t> sample_without_replacement(size_t n, size_t k, uint64_t seed) {
    std::vector<size_t> ids(n);
    std::iota(ids.begin(), ids.end(), size_t{0});
    std::mt19937_64 rng(seed);
    for (size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<size_t> pick(i, n - 1);
        std::swap(ids[i], ids[pick(rng)]);
    }
    ids.resize(k);
    return ids;
}

std::string compiler_string() {
#if defined(__clang__)
    return "clang " __clang_version__;
#elif defined(__GNUC__)
    return "gcc " __VERSION__;
#else
    return "unknown";
#endif
}

}  // namespace

CodeDataset generate_synthetic(size_t n, uint32_t m, const SyntheticModel& model, uint64_t seed) {
    if (n == 0 || m == 0) {
        throw InvalidArgument("synthetic dataset needs n > 0 and m > 0");
    }
    const size_t stride = words_for_bits(m);
    std::vector<uint64_t> words(n * stride, 0);
    std::mt19937_64 rng(seed);
    const uint64_t last_mask = m % 64 == 0 ? ~uint64_t{0} : (uint64_t{1} << (m % 64)) - 1;

    if (model.kind == SyntheticModel::Kind::uniform) {
        for (size_t i = 0; i < n; ++i) {
            for (size_t w = 0; w < stride; ++w) {
                words[i * stride + w] = rng();
            }
            words[i * stride + stride - 1] &= last_mask;
        }
        return CodeDataset(m, std::move(words));
    }

    if (model.block == 0 || model.block > m) {
        throw InvalidArgument("cluster block size must be in [1, m]");
    }
    if (!(model.flip >= 0.0 && model.flip <= 0.5)) {
        throw InvalidArgument("flip probability must be in [0, 0.5]");
    }
    // position_of[c * block + k] is where member k of cluster c lands.
    std::vector<uint32_t> position_of(m);
    std::iota(position_of.begin(), position_of.end(), 0u);
    std::shuffle(position_of.begin(), position_of.end(), rng);
    const uint32_t clusters = (m + model.block - 1) / model.block;

    std::bernoulli_distribution flip(model.flip);
    for (size_t i = 0; i < n; ++i) {
        uint64_t* code = &words[i * stride];
        for (uint32_t c = 0; c < clusters; ++c) {
            const bool base = (rng() & 1u) != 0;
            for (uint32_t k = 0; k < model.block && c * model.block + k < m; ++k) {
                const bool bit = base != flip(rng);
                if (bit) {
                    const uint32_t p = position_of[c * model.block + k];
                    code[p / 64] |= uint64_t{1} << (p % 64);
                }
            }
        }
    }
    return CodeDataset(m, std::move(words));
}

BenchConfig parse_bench_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("bench config: ") + e.what());
    }
    if (!j.is_object()) {
        throw ParseError("bench config must be a JSON object");
    }
    static const std::vector<std::string> kKeys = {
            "dataset", "n", "m", "model", "block", "flip", "query_count", "radii", "strategies", "seed",
            "warmup", "filter_width", "permutation", "output", "csv", "throughput"};
    for (const auto& [key, _] : j.items()) {
        if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end()) {
            throw ParseError("bench config: unknown key '" + key + "'");
        }
    }
    BenchConfig cfg;
    try {
        cfg.dataset_path = j.value("dataset", cfg.dataset_path);
        cfg.n = j.value("n", cfg.n);
        cfg.m = j.value("m", cfg.m);
        const std::string model = j.value("model", std::string("uniform"));
        if (model == "uniform") {
            cfg.model = SyntheticModel::uniform();
        } else if (model == "clustered") {
            cfg.model = SyntheticModel::clustered(j.value("block", 4u), j.value("flip", 0.05));
        } else {
            throw ParseError("bench config: model must be 'uniform' or 'clustered'");
        }
        cfg.query_count = j.value("query_count", cfg.query_count);
        if (j.contains("radii")) cfg.radii = j.at("radii").get<std::vector<uint32_t>>();
        if (j.contains("strategies")) {
            cfg.strategies.clear();
            for (const auto& s : j.at("strategies")) {
                cfg.strategies.push_back(parse_strategy(s.get<std::string>()));
            }
        }
        cfg.seed = j.value("seed", cfg.seed);
        cfg.warmup = j.value("warmup", cfg.warmup);
        cfg.filter_width = j.value("filter_width", cfg.filter_width);
        cfg.permutation_path = j.value("permutation", cfg.permutation_path);
        cfg.output_path = j.value("output", cfg.output_path);
        cfg.csv_path = j.value("csv", cfg.csv_path);
        cfg.throughput = j.value("throughput", cfg.throughput);
    } catch (const json::exception& e) {
        throw ParseError(std::string("bench config: ") + e.what());
    }
    if (cfg.strategies.empty()) {
        throw InvalidArgument("bench config: no strategies");
    }
    return cfg;
}

BenchConfig load_bench_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError(path.string() + ": cannot open for reading");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_bench_config(ss.str());
}

const CellStats* BenchReport::find(SearchStrategy s, uint32_t radius) const {
    for (const auto& c : cells) {
        if (c.strategy == s && c.radius == radius) return &c;
    }
    return nullptr;
}

CellStats summarize(SearchStrategy s, uint32_t radius, std::vector<double> samples_us,
                    std::vector<size_t> candidate_counts, size_t n) {
    CellStats c;
    c.strategy = s;
    c.radius = radius;
    const size_t k = samples_us.size();
    if (k > 0) {
        c.mean_us = std::accumulate(samples_us.begin(), samples_us.end(), 0.0) / static_cast<double>(k);
        double ss = 0;
        for (double x : samples_us) ss += (x - c.mean_us) * (x - c.mean_us);
        c.stddev_us = k > 1 ? std::sqrt(ss / static_cast<double>(k - 1)) : 0.0;
        std::vector<double> sorted = samples_us;
        std::sort(sorted.begin(), sorted.end());
        c.median_us = k % 2 ? sorted[k / 2] : 0.5 * (sorted[k / 2 - 1] + sorted[k / 2]);
        // Nearest-rank percentile.
        const auto rank = static_cast<size_t>(std::ceil(0.95 * static_cast<double>(k)));
        c.p95_us = sorted[std::max<size_t>(rank, 1) - 1];
    }
    if (!candidate_counts.empty() && n > 0) {
        double total = 0;
        for (size_t cc : candidate_counts) total += static_cast<double>(cc) / static_cast<double>(n);
        c.mean_candidate_fraction = total / static_cast<double>(candidate_counts.size());
    }
    c.samples_us = std::move(samples_us);
    c.candidate_counts = std::move(candidate_counts);
    return c;
}

SearchEngine default_engine_factory(std::shared_ptr<const CodeDataset> ds, const BenchConfig& cfg) {
    auto uses = [&](SearchStrategy s) {
        return std::find(cfg.strategies.begin(), cfg.strategies.end(), s) != cfg.strategies.end();
    };
    EngineOptions opts;
    opts.filter_width = cfg.filter_width;
    opts.build_term_match = uses(SearchStrategy::TermMatch);
    opts.build_filtered = uses(SearchStrategy::Filtered);
    opts.build_permuted = uses(SearchStrategy::FilteredPermuted);
    if (opts.build_permuted && !cfg.permutation_path.empty()) {
        opts.permutation = load_permutation(cfg.permutation_path);
    }
    return SearchEngine::build(std::move(ds), opts);
}

BenchReport run_bench(const BenchConfig& cfg, const EngineFactory& factory) {
    std::shared_ptr<const CodeDataset> ds;
    if (cfg.dataset_path.empty()) {
        ds = std::make_shared<const CodeDataset>(generate_synthetic(cfg.n, cfg.m, cfg.model, cfg.seed));
    } else {
        ds = std::make_shared<const CodeDataset>(load_any_dataset(cfg.dataset_path));
    }
    const SearchEngine engine = factory(ds, cfg);
    return run_bench(cfg, engine);
}

BenchReport run_bench(const BenchConfig& cfg, const SearchEngine& engine) {
    const size_t n = engine.size();
    const uint32_t m = engine.code_length();
    if (cfg.query_count == 0 || cfg.query_count > n) {
        throw InvalidArgument("query_count must be in [1, n]");
    }
    if (cfg.strategies.empty()) {
        throw InvalidArgument("no strategies to benchmark");
    }
    for (uint32_t r : cfg.radii) {
        if (r > m) throw InvalidArgument("radius " + std::to_string(r) + " exceeds m=" + std::to_string(m));
    }
    for (auto s : cfg.strategies) {
        if (!engine.supports(s)) {
            throw NotReadyError(std::string("engine cannot run ") + std::string(to_string(s)));
        }
    }

    // Distinct seed stream from the generator so queries are not the first codes.
    const auto query_ids = sample_without_replacement(n, cfg.query_count, cfg.seed ^ 0x9E3779B97F4A7C15ull);
    std::vector<BinaryCode> queries;
    queries.reserve(query_ids.size());
    for (size_t id : query_ids) queries.push_back(engine.dataset().code(id));

    BenchReport report;
    report.n = n;
    report.m = m;
    report.query_count = queries.size();
    if (auto layout = engine.filter_layout()) {
        report.filter_segments = layout->segment_count();
        report.filter_width = layout->width();
    }
    report.environment = {
            {"timing", "in-process monotonic clock around each search call, single-threaded; "
                       "only relative comparisons between strategies are meaningful"},
            {"compiler", compiler_string()},
            {"hardware_threads", std::to_string(std::thread::hardware_concurrency())},
            {"openmp_max_threads", std::to_string(kernels::omp::max_threads())},
            {"timestamp", std::to_string(std::time(nullptr))},
            {"seed", std::to_string(cfg.seed)},
            {"dataset", cfg.dataset_path.empty() ? "synthetic" : cfg.dataset_path},
    };

    const size_t k = cfg.strategies.size();
    for (uint32_t r : cfg.radii) {
        for (auto s : cfg.strategies) {
            for (uint32_t w = 0; w < cfg.warmup; ++w) {
                (void)engine.r_neighbor_search(s, queries[w % queries.size()], r);
            }
        }
        std::vector<std::vector<double>> samples(k);
        std::vector<std::vector<size_t>> cands(k);
        for (size_t qi = 0; qi < queries.size(); ++qi) {
            // Rotate the order per query so no strategy always runs right
            // after the cache-flushing ones.
            std::vector<Neighbor> reference;
            for (size_t step = 0; step < k; ++step) {
                const size_t si = (qi + step) % k;
                const auto start = Clock::now();
                SearchResult res = engine.r_neighbor_search(cfg.strategies[si], queries[qi], r);
                const double us = std::chrono::duration<double, std::micro>(Clock::now() - start).count();
                samples[si].push_back(us);
                cands[si].push_back(res.candidate_count);
                if (step == 0) {
                    reference = std::move(res.neighbors);
                } else if (res.neighbors != reference) {
                    throw CorrectnessError(std::string(to_string(cfg.strategies[si])) + " disagrees with " +
                                                   std::string(to_string(cfg.strategies[qi % k])) + " on query " +
                                                   std::to_string(qi) + " (code id " +
                                                   std::to_string(query_ids[qi]) + ") at r=" + std::to_string(r),
                                           qi, static_cast<int>(r));
                }
            }
        }
        for (size_t si = 0; si < k; ++si) {
            report.cells.push_back(summarize(cfg.strategies[si], r, std::move(samples[si]), std::move(cands[si]), n));
        }
    }

    if (cfg.throughput) {
        for (uint32_t r : cfg.radii) {
            for (auto s : cfg.strategies) {
                const auto start = Clock::now();
                const auto q = static_cast<long>(queries.size());
#pragma omp parallel for schedule(dynamic, 4)
                for (long qi = 0; qi < q; ++qi) {
                    (void)engine.r_neighbor_search(s, queries[static_cast<size_t>(qi)], r);
                }
                const double secs = std::chrono::duration<double>(Clock::now() - start).count();
                report.throughput.push_back({s, r, kernels::omp::max_threads(),
                                             static_cast<double>(queries.size()) / std::max(secs, 1e-9)});
            }
        }
    }

    if (!cfg.output_path.empty()) write_report(report, cfg.output_path);
    if (!cfg.csv_path.empty()) write_samples_csv(report, cfg.csv_path);
    return report;
}

std::string report_to_json(const BenchReport& report, int indent) {
    json j;
    j["schema_version"] = BenchReport::kSchemaVersion;
    j["environment"] = report.environment;
    j["n"] = report.n;
    j["m"] = report.m;
    j["filter_segments"] = report.filter_segments;
    j["filter_width"] = report.filter_width;
    j["query_count"] = report.query_count;
    j["results"] = json::array();
    for (const auto& c : report.cells) {
        j["results"].push_back({{"strategy", to_string(c.strategy)},
                                {"radius", c.radius},
                                {"mean_us", c.mean_us},
                                {"stddev_us", c.stddev_us},
                                {"median_us", c.median_us},
                                {"p95_us", c.p95_us},
                                {"mean_candidate_fraction", c.mean_candidate_fraction},
                                {"samples_us", c.samples_us},
                                {"candidate_counts", c.candidate_counts}});
    }
    j["throughput"] = json::array();
    for (const auto& t : report.throughput) {
        j["throughput"].push_back(
                {{"strategy", to_string(t.strategy)}, {"radius", t.radius}, {"threads", t.threads}, {"qps", t.qps}});
    }
    return j.dump(indent);
}

BenchReport report_from_json(const std::string& text) {
    BenchReport r;
    try {
        const json j = json::parse(text);
        if (j.at("schema_version").get<int>() != BenchReport::kSchemaVersion) {
            throw FormatError("report schema version " + j.at("schema_version").dump() + " is not supported");
        }
        r.environment = j.at("environment").get<std::map<std::string, std::string>>();
        r.n = j.at("n").get<size_t>();
        r.m = j.at("m").get<uint32_t>();
        r.filter_segments = j.at("filter_segments").get<uint32_t>();
        r.filter_width = j.at("filter_width").get<uint32_t>();
        r.query_count = j.at("query_count").get<size_t>();
        for (const auto& c : j.at("results")) {
            CellStats cell;
            cell.strategy = parse_strategy(c.at("strategy").get<std::string>());
            cell.radius = c.at("radius").get<uint32_t>();
            cell.mean_us = c.at("mean_us").get<double>();
            cell.stddev_us = c.at("stddev_us").get<double>();
            cell.median_us = c.at("median_us").get<double>();
            cell.p95_us = c.at("p95_us").get<double>();
            cell.mean_candidate_fraction = c.at("mean_candidate_fraction").get<double>();
            cell.samples_us = c.at("samples_us").get<std::vector<double>>();
            cell.candidate_counts = c.at("candidate_counts").get<std::vector<size_t>>();
            r.cells.push_back(std::move(cell));
        }
        for (const auto& t : j.value("throughput", json::array())) {
            r.throughput.push_back({parse_strategy(t.at("strategy").get<std::string>()), t.at("radius").get<uint32_t>(),
                                    t.at("threads").get<int>(), t.at("qps").get<double>()});
        }
    } catch (const json::exception& e) {
        throw FormatError(std::string("bench report: ") + e.what());
    }
    return r;
}

void write_report(const BenchReport& report, const std::filesystem::path& path) {
    write_text(path, report_to_json(report) + "\n");
}

BenchReport load_report(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError(path.string() + ": cannot open for reading");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return report_from_json(ss.str());
}

void write_samples_csv(const BenchReport& report, const std::filesystem::path& path) {
    std::ostringstream out;
    out << "strategy,radius,query,latency_us,candidates\n";
    for (const auto& c : report.cells) {
        for (size_t q = 0; q < c.samples_us.size(); ++q) {
            out << to_string(c.strategy) << ',' << c.radius << ',' << q << ',' << c.samples_us[q] << ','
                << (q < c.candidate_counts.size() ? c.candidate_counts[q] : 0) << '\n';
        }
    }
    write_text(path, out.str());
}

}  // namespace fenshses

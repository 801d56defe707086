/*
 * SPDX-License-Identifier: Apache-2.0
 */

#include "fenshses/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "fenshses/bench.hpp"
#include "fenshses/code_store.hpp"
#include "fenshses/error.hpp"
#include "fenshses/permutation.hpp"
#include "fenshses/service.hpp"
#include "json.hpp"

namespace fenshses {

namespace {

using nlohmann::json;

/// Settings for query/serve resolved as: flag, then FENSHSES_<KEY>, then the
/// JSON file given with --config.
class Settings {
   public:
    void load(const std::string& path) {
        if (path.empty()) return;
        std::ifstream in(path);
        if (!in) throw IoError(path + ": cannot open config file");
        try {
            file_ = json::parse(in);
        } catch (const json::exception& e) {
            throw ParseError(path + ": " + e.what());
        }
        if (!file_.is_object()) throw ParseError(path + ": config must be a JSON object");
    }

    std::string resolve(const CLI::Option* flag, const std::string& key, const std::string& value) const {
        if (flag != nullptr && flag->count() > 0) return value;
        std::string env_name = "FENSHSES_" + key;
        for (auto& c : env_name) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        if (const char* env = std::getenv(env_name.c_str()); env != nullptr && *env != '\0') return env;
        if (file_.contains(key)) {
            const auto& v = file_.at(key);
            return v.is_string() ? v.get<std::string>() : v.dump();
        }
        return value;
    }

   private:
    json file_ = json::object();
};

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError(path + ": cannot open for writing");
    f << text;
    if (!f) throw IoError(path + ": write failed");
}

void set_threads(int threads) {
#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#else
    (void)threads;
#endif
}

std::pair<std::string, int> parse_listen(const std::string& spec) {
    const auto colon = spec.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == spec.size()) {
        throw InvalidArgument("--listen expects host:port, got '" + spec + "'");
    }
    int port = 0;
    try {
        port = std::stoi(spec.substr(colon + 1));
    } catch (const std::exception&) {
        throw InvalidArgument("bad port in '" + spec + "'");
    }
    if (port < 0 || port > 65535) throw InvalidArgument("port out of range in '" + spec + "'");
    return {spec.substr(0, colon), port};
}

void print_bench_table(const BenchReport& report, std::ostream& out) {
    out << "n=" << report.n << " m=" << report.m << " filter s=" << report.filter_segments
        << " w=" << report.filter_width << " queries=" << report.query_count << "\n";
    out << std::left << std::setw(18) << "strategy" << std::right << std::setw(6) << "r" << std::setw(12) << "mean_us"
        << std::setw(12) << "stddev_us" << std::setw(12) << "median_us" << std::setw(12) << "p95_us" << std::setw(14)
        << "cand_frac" << "\n";
    out << std::fixed;
    for (const auto& c : report.cells) {
        out << std::left << std::setw(18) << to_string(c.strategy) << std::right << std::setw(6) << c.radius
            << std::setprecision(2) << std::setw(12) << c.mean_us << std::setw(12) << c.stddev_us << std::setw(12)
            << c.median_us << std::setw(12) << c.p95_us << std::setprecision(6) << std::setw(14)
            << c.mean_candidate_fraction << "\n";
    }
    for (const auto& t : report.throughput) {
        out << "throughput " << to_string(t.strategy) << " r=" << t.radius << " threads=" << t.threads
            << " qps=" << std::setprecision(1) << t.qps << "\n";
    }
    out << std::defaultfloat;
}

}  // namespace

SearchEngine load_engine(const std::filesystem::path& index_path, const IndexLoadOptions& opts) {
    const auto header = SubcodeIndex::read_header(index_path);
    const std::string data_path = opts.data_path.empty() ? header.sources.dataset_path : opts.data_path;
    if (data_path.empty()) {
        throw FormatError(index_path.string() + ": no dataset path recorded; pass --data");
    }
    auto ds = std::make_shared<const CodeDataset>(load_any_dataset(data_path));

    SearchEngine::Parts parts;
    parts.dataset = ds;
    parts.exec = opts.exec;
    if (header.permutation_hash != 0) {
        const std::string perm_path =
                opts.permutation_path.empty() ? header.sources.permutation_path : opts.permutation_path;
        if (perm_path.empty()) {
            throw FormatError(index_path.string() + ": index is permuted but no permutation path is known");
        }
        Permutation perm = load_permutation(perm_path);
        if (perm.hash() != header.permutation_hash) {
            throw FormatError(perm_path + ": permutation does not match the one the index was built with");
        }
        auto pds = std::make_shared<const CodeDataset>(apply_permutation(*ds, perm));
        SubcodeIndex idx = SubcodeIndex::load(index_path, pds);
        if (opts.unpermuted_filter) {
            parts.filtered = SubcodeIndex::build(ds, idx.layout());
        }
        parts.permuted = SearchEngine::PermutedIndex{std::move(perm), std::move(idx)};
    } else {
        parts.filtered = SubcodeIndex::load(index_path, ds);
    }
    if (opts.term_match) {
        parts.term_match = PositionPostings::build(*ds);
    }
    return SearchEngine(std::move(parts));
}

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Exact r-neighbor and k-NN search over binary codes in Hamming space"};
    app.name("fenshses");
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset");
    size_t gen_n = 500000;
    uint32_t gen_m = 128;
    std::string gen_model = "uniform";
    uint32_t gen_block = 4;
    double gen_flip = 0.05;
    uint64_t gen_seed = 1;
    std::string gen_out, gen_format = "fbin";
    gen->add_option("--n", gen_n, "Number of codes")->capture_default_str();
    gen->add_option("--m", gen_m, "Bits per code")->capture_default_str();
    gen->add_option("--model", gen_model, "uniform | clustered")->check(CLI::IsMember({"uniform", "clustered"}))
            ->capture_default_str();
    gen->add_option("--block", gen_block, "Clustered: columns per cluster")->capture_default_str();
    gen->add_option("--flip", gen_flip, "Clustered: per-bit flip probability")->capture_default_str();
    gen->add_option("--seed", gen_seed, "RNG seed")->capture_default_str();
    gen->add_option("--out", gen_out, "Output path")->required();
    gen->add_option("--format", gen_format, "fbin | text")->check(CLI::IsMember({"fbin", "text"}))
            ->capture_default_str();

    // permute
    auto* permute = app.add_subcommand("permute", "Optimize a bit permutation for sub-code filtering");
    std::string perm_data, perm_out;
    uint32_t perm_width = 16;
    uint64_t perm_seed = 0;
    permute->add_option("--data", perm_data, "Dataset (FBIN or text)")->required();
    permute->add_option("--width", perm_width, "Filter segment width")->capture_default_str();
    permute->add_option("--seed", perm_seed, "Tie-break seed (0 = lowest index)")->capture_default_str();
    permute->add_option("--out", perm_out, "Permutation sidecar path")->required();

    // build
    auto* build = app.add_subcommand("build", "Build a sub-code index (FIDX)");
    std::string build_data, build_perm, build_out;
    uint32_t build_width = 16;
    build->add_option("--data", build_data, "Dataset (FBIN or text)")->required();
    build->add_option("--perm", build_perm, "Permutation sidecar; index the permuted codes");
    build->add_option("--width", build_width, "Filter segment width")->capture_default_str();
    build->add_option("--out", build_out, "Index output path")->required();

    // query
    auto* query = app.add_subcommand("query", "Search an index");
    std::string q_index, q_data, q_perm, q_code, q_strategy, q_format = "json", q_config;
    int64_t q_radius = -1, q_k = -1;
    int q_threads = 1;
    auto* q_index_opt = query->add_option("--index", q_index, "Index file (FIDX)");
    auto* q_data_opt = query->add_option("--data", q_data, "Dataset override");
    auto* q_perm_opt = query->add_option("--perm", q_perm, "Permutation override");
    query->add_option("--code", q_code, "Query code in hex")->required();
    auto* q_radius_opt = query->add_option("--radius", q_radius, "Hamming radius");
    auto* q_k_opt = query->add_option("--k", q_k, "Number of nearest neighbors");
    q_radius_opt->excludes(q_k_opt);
    auto* q_strategy_opt = query->add_option("--strategy", q_strategy, "TermMatch|BitOpScan|Filtered|FilteredPermuted");
    query->add_option("--format", q_format, "json | text")->check(CLI::IsMember({"json", "text"}))
            ->capture_default_str();
    auto* q_threads_opt = query->add_option("--threads", q_threads, "Worker threads (>1 enables OpenMP kernels)");
    query->add_option("--config", q_config, "JSON settings file");

    // bench
    auto* bench = app.add_subcommand("bench", "Run the latency benchmark");
    std::string b_config, b_out, b_csv;
    bool b_json = false;
    bench->add_option("--config", b_config, "Benchmark config (JSON)")->required();
    bench->add_option("--out", b_out, "Report JSON path (overrides config)");
    bench->add_option("--csv", b_csv, "Raw samples CSV path (overrides config)");
    bench->add_flag("--json", b_json, "Print the JSON report instead of a table");

    // serve
    auto* serve = app.add_subcommand("serve", "Serve searches over HTTP");
    std::string s_index, s_data, s_perm, s_listen = "127.0.0.1:8080", s_config;
    int s_threads = 1;
    bool s_no_term = false;
    auto* s_index_opt = serve->add_option("--index", s_index, "Index file (FIDX)");
    auto* s_data_opt = serve->add_option("--data", s_data, "Dataset override");
    auto* s_perm_opt = serve->add_option("--perm", s_perm, "Permutation override");
    auto* s_listen_opt = serve->add_option("--listen", s_listen, "host:port")->capture_default_str();
    auto* s_threads_opt = serve->add_option("--threads", s_threads, "Worker threads for OpenMP kernels");
    serve->add_flag("--no-term-match", s_no_term, "Skip building term-match postings");
    serve->add_option("--config", s_config, "JSON settings file");

    // plot
    auto* plot = app.add_subcommand("plot", "Render a latency-vs-radius SVG from a bench report");
    std::string p_report, p_out, p_title;
    plot->add_option("--report", p_report, "Bench report JSON")->required();
    plot->add_option("--out", p_out, "SVG output path")->required();
    plot->add_option("--title", p_title, "Chart title");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*gen) {
            const auto model = gen_model == "clustered" ? SyntheticModel::clustered(gen_block, gen_flip)
                                                        : SyntheticModel::uniform();
            const CodeDataset ds = generate_synthetic(gen_n, gen_m, model, gen_seed);
            if (gen_format == "text") {
                save_text_dataset(ds, gen_out);
            } else {
                save_dataset(ds, gen_out);
            }
            out << "wrote " << ds.size() << " codes of " << ds.code_length() << " bits to " << gen_out << "\n";
        } else if (*permute) {
            const CodeDataset ds = load_any_dataset(perm_data);
            const auto layout = SubCodeLayout::from_width(ds.code_length(), perm_width);
            const CorrelationMatrix M = estimate_correlations(ds);
            for (uint32_t c : M.constant_columns()) {
                err << "warning: bit " << c << " is constant; its correlations are treated as 0\n";
            }
            KernighanLinOptions kl;
            kl.seed = perm_seed;
            const auto trace = kernighan_lin_traced(M, layout, kl);
            save_permutation(trace.permutation, perm_out);
            out << json{{"objective_identity", trace.initial_objective},
                        {"objective_permuted", trace.final_objective},
                        {"swaps", trace.objective_after_swap.size()},
                        {"passes", trace.passes},
                        {"permutation", perm_out}}
                           .dump()
                << "\n";
        } else if (*build) {
            auto ds = std::make_shared<const CodeDataset>(load_any_dataset(build_data));
            const auto layout = SubCodeLayout::from_width(ds->code_length(), build_width);
            IndexSources sources{std::filesystem::absolute(build_data).string(), ""};
            std::optional<SubcodeIndex> idx;
            if (!build_perm.empty()) {
                const Permutation perm = load_permutation(build_perm);
                auto pds = std::make_shared<const CodeDataset>(apply_permutation(*ds, perm));
                idx = SubcodeIndex::build(pds, layout, perm.hash());
                sources.permutation_path = std::filesystem::absolute(build_perm).string();
            } else {
                idx = SubcodeIndex::build(ds, layout);
            }
            idx->set_sources(sources);
            idx->save(build_out);
            out << json{{"index", build_out},
                        {"m", ds->code_length()},
                        {"n", ds->size()},
                        {"s", layout.segment_count()},
                        {"w", layout.width()},
                        {"permuted", !build_perm.empty()}}
                           .dump()
                << "\n";
        } else if (*query) {
            Settings settings;
            settings.load(q_config);
            IndexLoadOptions lo;
            const std::string index = settings.resolve(q_index_opt, "index", q_index);
            lo.data_path = settings.resolve(q_data_opt, "data", q_data);
            lo.permutation_path = settings.resolve(q_perm_opt, "perm", q_perm);
            const std::string strategy_name = settings.resolve(q_strategy_opt, "strategy", q_strategy);
            const int threads = std::stoi(settings.resolve(q_threads_opt, "threads", std::to_string(q_threads)));
            if (index.empty()) throw InvalidArgument("query needs --index");
            if (!*q_radius_opt && !*q_k_opt) throw InvalidArgument("query needs --radius or --k");
            set_threads(threads);
            lo.exec = threads > 1 ? Execution::parallel : Execution::serial;

            std::optional<SearchStrategy> strategy;
            if (!strategy_name.empty()) strategy = parse_strategy(strategy_name);
            lo.term_match = strategy == SearchStrategy::TermMatch;
            lo.unpermuted_filter = strategy == SearchStrategy::Filtered;
            const SearchEngine engine = load_engine(index, lo);
            const SearchStrategy s = strategy.value_or(engine.default_strategy());
            const BinaryCode q = parse_code_hex(q_code, engine.code_length());
            if (*q_radius_opt && (q_radius < 0 || q_radius > engine.code_length())) {
                throw InvalidArgument("--radius must be in [0, " + std::to_string(engine.code_length()) + "]");
            }
            if (*q_k_opt && q_k < 1) throw InvalidArgument("--k must be at least 1");
            const SearchResult res = *q_radius_opt ? engine.r_neighbor_search(s, q, static_cast<uint32_t>(q_radius))
                                                   : engine.knn_search(s, q, static_cast<size_t>(q_k));
            if (q_format == "text") {
                for (const auto& nb : res.neighbors) out << nb.id << '\t' << nb.distance << '\n';
            } else {
                out << service::result_to_json(res) << '\n';
            }
        } else if (*bench) {
            BenchConfig cfg = load_bench_config(b_config);
            if (!b_out.empty()) cfg.output_path = b_out;
            if (!b_csv.empty()) cfg.csv_path = b_csv;
            const BenchReport report = run_bench(cfg);
            if (b_json) {
                out << report_to_json(report) << '\n';
            } else {
                print_bench_table(report, out);
            }
        } else if (*serve) {
            Settings settings;
            settings.load(s_config);
            IndexLoadOptions lo;
            const std::string index = settings.resolve(s_index_opt, "index", s_index);
            lo.data_path = settings.resolve(s_data_opt, "data", s_data);
            lo.permutation_path = settings.resolve(s_perm_opt, "perm", s_perm);
            const std::string listen = settings.resolve(s_listen_opt, "listen", s_listen);
            const int threads = std::stoi(settings.resolve(s_threads_opt, "threads", std::to_string(s_threads)));
            if (index.empty()) throw InvalidArgument("serve needs --index");
            const auto [host, port] = parse_listen(listen);
            set_threads(threads);
            lo.exec = threads > 1 ? Execution::parallel : Execution::serial;
            lo.term_match = !s_no_term;
            lo.unpermuted_filter = true;
            auto engine = std::make_shared<const SearchEngine>(load_engine(index, lo));
            const service::SearchService svc(engine);
            service::HttpServer server(svc);
            err << "listening on " << host << ":" << port << "\n";
            if (!server.listen(host, port)) {
                throw IoError("cannot listen on " + listen);
            }
        } else if (*plot) {
            const BenchReport report = load_report(p_report);
            write_text_file(p_out, render_latency_svg(report, p_title));
            out << "wrote " << p_out << "\n";
        }
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const CorrectnessError& e) {
        err << "correctness failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

}  // namespace fenshses

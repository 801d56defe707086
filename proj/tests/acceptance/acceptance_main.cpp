/*
 * SPDX-License-Identifier: Apache-2.0
 */

// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails. Thresholds are fixed here and never adapted to results.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "fenshses/bench.hpp"
#include "fenshses/cli.hpp"
#include "fenshses/code_store.hpp"
#include "fenshses/permutation.hpp"
#include "fenshses/search_engine.hpp"
#include "fenshses/service.hpp"
#include "httplib.h"
#include "json.hpp"
#include "oracles.hpp"

using namespace fenshses;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass;
    std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& body) {
    const auto start = Clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    if (!o.pass) ++failures;
    std::printf("CRITERION %d %s: %s | %s (%.1fs)\n", id, o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(),
                secs);
    std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

// 10,000 random centers; each code is a center with every bit flipped
// independently with probability 0.06, so radius balls of 5..20 hold
// several codes.
CodeDataset near_duplicate_dataset(size_t n, uint32_t m, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<BinaryCode> centers;
    for (int i = 0; i < 10000; ++i) centers.push_back(oracle::random_code(m, rng));
    std::bernoulli_distribution flip(0.06);
    std::vector<BinaryCode> codes;
    codes.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        const auto& c = centers[rng() % centers.size()];
        std::vector<uint64_t> w(c.words().begin(), c.words().end());
        for (uint32_t b = 0; b < m; ++b)
            if (flip(rng)) w[b / 64] ^= uint64_t{1} << (b % 64);
        codes.emplace_back(m, std::move(w));
    }
    return CodeDataset(codes);
}

// Per-bit distances from q to every code.
std::vector<uint32_t> naive_distances(const CodeDataset& ds, const BinaryCode& q) {
    std::vector<uint32_t> d(ds.size());
    for (size_t i = 0; i < ds.size(); ++i) d[i] = oracle::naive_hamming(ds.code(i), q);
    return d;
}

std::vector<Neighbor> within(const std::vector<uint32_t>& dist, uint32_t r) {
    std::vector<Neighbor> out;
    for (size_t i = 0; i < dist.size(); ++i)
        if (dist[i] <= r) out.push_back({static_cast<CodeId>(i), dist[i]});
    std::stable_sort(out.begin(), out.end(), [](const Neighbor& a, const Neighbor& b) { return a.distance < b.distance; });
    return out;
}

std::vector<uint8_t> file_bytes(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

std::pair<int, std::string> run_command(const std::string& cmd) {
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return {-1, ""};
    std::string out;
    char buf[4096];
    size_t got;
    while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, got);
    const int status = pclose(pipe);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

json neighbors_json(const std::vector<Neighbor>& v) {
    json a = json::array();
    for (const auto& nb : v) a.push_back({{"id", nb.id}, {"distance", nb.distance}});
    return a;
}

struct Shared {
    std::shared_ptr<const CodeDataset> ds;  // criteria 1, 7, 8, 9
    std::unique_ptr<SearchEngine> engine;
    std::vector<BinaryCode> queries;
    fs::path dir;
};

Outcome exactness(Shared& sh) {
    size_t checked = 0, nonempty = 0, max_size = 0;
    for (const auto& q : sh.queries) {
        const auto dist = naive_distances(*sh.ds, q);
        for (uint32_t r : {5u, 10u, 15u, 20u}) {
            const auto expect = within(dist, r);
            for (auto s : kAllStrategies) {
                if (sh.engine->r_neighbor_search(s, q, r).neighbors != expect) {
                    return {false, std::string(to_string(s)) + " differs from the oracle at r=" + std::to_string(r)};
                }
                ++checked;
            }
            nonempty += expect.size() > 1;
            max_size = std::max(max_size, expect.size());
        }
    }
    return {true, std::to_string(checked) + " (strategy, query, radius) results equal the per-bit scan; " +
                          std::to_string(nonempty) + "/400 sets hold more than the query's own code, largest " +
                          std::to_string(max_size)};
}

Outcome popcount_fidelity() {
    for (uint64_t v = 0; v < (1u << 16); ++v) {
        if (hakmem_popcount64(v) != oracle::naive_popcount(v)) return {false, "mismatch at " + std::to_string(v)};
    }
    std::mt19937_64 rng(2024);
    for (int i = 0; i < 1000000; ++i) {
        const uint64_t u = rng();
        if (hakmem_popcount64(u) != oracle::naive_popcount(u)) return {false, "mismatch on a random word"};
    }
    return {true, "65536 low-bit values and 1000000 random words match"};
}

struct Uniform {
    std::unique_ptr<SearchEngine> engine;
    BenchReport r5;
    BenchReport grouping;
};

Outcome filter_effectiveness(Uniform& u) {
    auto ds = std::make_shared<const CodeDataset>(generate_synthetic(500000, 128, SyntheticModel::uniform(), 3));
    EngineOptions opts;
    opts.filter_width = 16;
    u.engine = std::make_unique<SearchEngine>(SearchEngine::build(ds, opts));

    BenchConfig cfg;
    cfg.query_count = 200;
    cfg.radii = {5};
    cfg.seed = 3;
    u.r5 = run_bench(cfg, *u.engine);
    auto med = [&](SearchStrategy s) { return u.r5.find(s, 5)->median_us; };
    const double fp = med(SearchStrategy::FilteredPermuted), f = med(SearchStrategy::Filtered),
                 b = med(SearchStrategy::BitOpScan), t = med(SearchStrategy::TermMatch);
    const double frac_f = u.r5.find(SearchStrategy::Filtered, 5)->mean_candidate_fraction;
    const double frac_fp = u.r5.find(SearchStrategy::FilteredPermuted, 5)->mean_candidate_fraction;
    const bool pass = frac_f <= 0.001 && frac_fp <= 0.001 && fp <= f && f < b && b < t;
    std::ostringstream d;
    d << "candidate fraction Filtered " << fmt("%.5f%%", 100 * frac_f) << ", FilteredPermuted "
      << fmt("%.5f%%", 100 * frac_fp) << " (limit 0.1%); median us FilteredPermuted " << fmt("%.2f", fp)
      << " Filtered " << fmt("%.2f", f) << " BitOpScan " << fmt("%.1f", b) << " TermMatch " << fmt("%.1f", t);
    return {pass, d.str()};
}

Outcome scan_speedup(const Uniform& u) {
    if (u.r5.cells.empty()) return {false, "criterion 3 dataset unavailable"};
    const double b = u.r5.find(SearchStrategy::BitOpScan, 5)->median_us;
    const double t = u.r5.find(SearchStrategy::TermMatch, 5)->median_us;
    return {t >= 4 * b, "TermMatch/BitOpScan median ratio " + fmt("%.1f", t / b) + " (need >= 4)"};
}

Outcome radius_grouping(Uniform& u) {
    if (!u.engine) return {false, "criterion 3 dataset unavailable"};
    BenchConfig cfg;
    cfg.query_count = 200;
    cfg.radii = {8, 9, 10, 11, 12, 13, 14, 15, 16};
    cfg.strategies = {SearchStrategy::Filtered, SearchStrategy::BitOpScan};
    cfg.seed = 5;
    u.grouping = run_bench(cfg, *u.engine);
    double lo = INFINITY, hi = 0;
    for (uint32_t r = 8; r <= 15; ++r) {
        const double m = u.grouping.find(SearchStrategy::Filtered, r)->median_us;
        lo = std::min(lo, m);
        hi = std::max(hi, m);
    }
    const double f15 = u.grouping.find(SearchStrategy::Filtered, 15)->mean_candidate_fraction;
    const double f16 = u.grouping.find(SearchStrategy::Filtered, 16)->mean_candidate_fraction;
    const bool pass = hi <= 2 * lo && f16 >= 3 * f15;
    return {pass, "Filtered medians for r=8..15 span " + fmt("%.2f", lo) + ".." + fmt("%.2f", hi) +
                          " us (max/min " + fmt("%.2f", hi / lo) + ", need <= 2); candidate fraction r=16/r=15 " +
                          fmt("%.2f", f16 / f15) + " (need >= 3)"};
}

double exhaustive_optimum8(const CorrelationMatrix& M) {
    double best = INFINITY;
    for (uint32_t mask = 0; mask < 256; ++mask) {
        if (std::popcount(mask) != 4 || !(mask & 1)) continue;
        double total = 0;
        for (uint32_t i = 0; i < 8; ++i)
            for (uint32_t j = 0; j < 8; ++j)
                if (((mask >> i) & 1) == ((mask >> j) & 1)) total += M(i, j);
        best = std::min(best, total);
    }
    return best;
}

Outcome permutation_optimization() {
    // (a) objective reduction on clustered data.
    auto ds = std::make_shared<const CodeDataset>(
            generate_synthetic(100000, 128, SyntheticModel::clustered(4, 0.05), 6));
    const auto layout = SubCodeLayout::from_width(128, 16);
    const auto M = estimate_correlations(*ds);
    const auto trace = kernighan_lin_traced(M, layout);
    const double reduction = 1.0 - trace.final_objective / trace.initial_objective;
    const bool a = trace.final_objective <= trace.initial_objective && reduction >= 0.05;

    // (b) exhaustive optimum on small instances.
    const auto small = SubCodeLayout::from_segment_count(8, 2);
    int hits = 0;
    for (uint64_t seed = 1; seed <= 20; ++seed) {
        const auto M8 = estimate_correlations(generate_synthetic(2000, 8, SyntheticModel::clustered(4, 0.05), seed));
        const double got = objective(M8, kernighan_lin(M8, small), BlockMask(small));
        hits += std::abs(got - exhaustive_optimum8(M8)) <= 1e-9;
    }
    const bool b = hits >= 18;

    // (c) candidate fractions with and without the permutation.
    EngineOptions opts;
    opts.build_term_match = false;
    opts.permutation = trace.permutation;
    const SearchEngine engine = SearchEngine::build(ds, opts);
    BenchConfig cfg;
    cfg.query_count = 200;
    cfg.radii = {5, 10, 15, 20};
    cfg.strategies = {SearchStrategy::Filtered, SearchStrategy::FilteredPermuted};
    cfg.warmup = 0;
    cfg.seed = 6;
    const auto rep = run_bench(cfg, engine);
    bool c = true;
    std::ostringstream cd;
    for (uint32_t r : cfg.radii) {
        const double f = rep.find(SearchStrategy::Filtered, r)->mean_candidate_fraction;
        const double fp = rep.find(SearchStrategy::FilteredPermuted, r)->mean_candidate_fraction;
        c = c && fp <= f;
        cd << " r=" << r << ": " << fmt("%.4f", fp) << " vs " << fmt("%.4f", f);
    }
    std::ostringstream d;
    d << "(a) objective " << fmt("%.2f", trace.initial_objective) << " -> " << fmt("%.2f", trace.final_objective)
      << " (" << fmt("%.1f", 100 * reduction) << "% lower, need >= 5%) " << (a ? "ok" : "FAIL") << "; (b) " << hits
      << "/20 instances at the exhaustive optimum (need >= 18) " << (b ? "ok" : "FAIL")
      << "; (c) candidate fraction permuted vs plain" << cd.str() << " " << (c ? "ok" : "FAIL");
    return {a && b && c, d.str()};
}

Outcome knn_correctness(Shared& sh) {
    std::mt19937_64 rng(7);
    size_t checked = 0;
    for (int i = 0; i < 100; ++i) {
        const auto q = oracle::random_code(128, rng);
        const auto dist = naive_distances(*sh.ds, q);
        std::vector<Neighbor> all(dist.size());
        for (size_t j = 0; j < dist.size(); ++j) all[j] = {static_cast<CodeId>(j), dist[j]};
        std::stable_sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) { return a.distance < b.distance; });
        for (size_t k : {1ul, 10ul, 100ul}) {
            const std::vector<Neighbor> expect(all.begin(), all.begin() + static_cast<long>(k));
            for (auto s : kAllStrategies) {
                if (sh.engine->knn_search(s, q, k).neighbors != expect) {
                    return {false, std::string(to_string(s)) + " differs at k=" + std::to_string(k)};
                }
                ++checked;
            }
        }
    }
    return {true, std::to_string(checked) + " (strategy, query, k) results equal the sorted oracle prefix"};
}

Outcome persistence(Shared& sh) {
    const auto fbin = sh.dir / "codes.fbin", fbin2 = sh.dir / "codes2.fbin";
    save_dataset(*sh.ds, fbin);
    const auto loaded = std::make_shared<const CodeDataset>(load_dataset(fbin));
    save_dataset(*loaded, fbin2);
    const bool fbin_ok = *loaded == *sh.ds && file_bytes(fbin) == file_bytes(fbin2);

    const auto& pi = *sh.engine->permuted_index();
    const auto perm_path = sh.dir / "codes.perm";
    save_permutation(pi.permutation, perm_path);
    auto index = pi.index;
    index.set_sources({fs::absolute(fbin).string(), fs::absolute(perm_path).string()});
    const auto fidx = sh.dir / "codes.fidx", fidx2 = sh.dir / "codes2.fidx";
    index.save(fidx);

    IndexLoadOptions lo;
    lo.unpermuted_filter = true;
    lo.term_match = true;
    const SearchEngine reloaded = load_engine(fidx, lo);
    reloaded.permuted_index()->index.save(fidx2);
    const bool fidx_ok = file_bytes(fidx) == file_bytes(fidx2) && reloaded.permuted_index()->index.same_postings(index);

    size_t compared = 0;
    for (const auto& q : sh.queries) {
        for (uint32_t r : {5u, 10u, 15u, 20u}) {
            for (auto s : kAllStrategies) {
                const auto a = sh.engine->r_neighbor_search(s, q, r);
                const auto b = reloaded.r_neighbor_search(s, q, r);
                if (a.neighbors != b.neighbors || a.candidate_count != b.candidate_count) {
                    return {false, "reloaded " + std::string(to_string(s)) + " differs at r=" + std::to_string(r)};
                }
                ++compared;
            }
        }
    }
    return {fbin_ok && fidx_ok, std::string("FBIN ") + (fbin_ok ? "byte-exact" : "MISMATCH") + ", FIDX " +
                                        (fidx_ok ? "byte-exact" : "MISMATCH") + ", " + std::to_string(compared) +
                                        " reloaded results equal the pre-save ones"};
}

Outcome interface_equivalence(Shared& sh) {
    const auto fidx = sh.dir / "codes.fidx";
    if (!fs::exists(fidx)) return {false, "criterion 8 index file missing"};
    IndexLoadOptions lo;
    lo.unpermuted_filter = true;
    lo.term_match = true;
    auto served = std::make_shared<const SearchEngine>(load_engine(fidx, lo));
    const service::SearchService svc(served);
    service::HttpServer server(svc);
    const int port = server.bind_to_any_port("127.0.0.1");
    if (port <= 0) return {false, "cannot bind a local port"};
    std::thread th([&] { server.listen_after_bind(); });
    server.wait_until_ready();
    httplib::Client client("127.0.0.1", port);

    std::string failure;
    for (int i = 0; i < 20 && failure.empty(); ++i) {
        const auto& q = sh.queries[static_cast<size_t>(i)];
        const bool knn = i % 2 == 1;
        const uint32_t param = knn ? 1 + static_cast<uint32_t>(i) * 5 : 5 + static_cast<uint32_t>(i % 4) * 5;
        const auto s = sh.engine->default_strategy();
        const auto expect = knn ? sh.engine->knn_search(s, q, param) : sh.engine->r_neighbor_search(s, q, param);
        const json want = neighbors_json(expect.neighbors);
        const std::string hex = format_code_hex(q);

        const auto res = client.Post(knn ? "/knn" : "/search",
                                     json{{"code", hex}, {knn ? "k" : "radius", param}}.dump(), "application/json");
        if (!res || res->status != 200) {
            failure = "HTTP request " + std::to_string(i) + " failed";
            break;
        }
        const auto hj = json::parse(res->body);
        if (hj.at("neighbors") != want || hj.at("candidate_count") != expect.candidate_count) {
            failure = "HTTP result " + std::to_string(i) + " differs";
            break;
        }

        const std::string cmd = std::string("'") + FENSHSES_CLI_PATH + "' query --index '" + fidx.string() +
                                "' --code " + hex + (knn ? " --k " : " --radius ") + std::to_string(param) +
                                " 2>/dev/null";
        const auto [code, out] = run_command(cmd);
        if (code != 0) {
            failure = "CLI query " + std::to_string(i) + " exited with " + std::to_string(code);
            break;
        }
        const auto cj = json::parse(out);
        if (cj.at("neighbors") != want || cj.at("candidate_count") != expect.candidate_count) {
            failure = "CLI result " + std::to_string(i) + " differs";
        }
    }
    server.stop();
    th.join();
    if (!failure.empty()) return {false, failure};
    return {true, "20 queries (10 radius, 10 k-NN) identical over HTTP, CLI and in-process"};
}

}  // namespace

int main() {
    Shared sh;
    sh.dir = fs::temp_directory_path() / ("fenshses_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(sh.dir);
    sh.ds = std::make_shared<const CodeDataset>(near_duplicate_dataset(50000, 128, 1));
    sh.engine = std::make_unique<SearchEngine>(SearchEngine::build(sh.ds));
    {
        std::mt19937_64 rng(11);
        for (int i = 0; i < 100; ++i) {
            // Dataset codes with a few extra flips, so most queries are not stored codes.
            sh.queries.push_back(oracle::flip_bits(sh.ds->code(rng() % sh.ds->size()), static_cast<uint32_t>(rng() % 6), rng));
        }
    }

    Uniform u;
    report(1, "exactness", [&] { return exactness(sh); });
    report(2, "popcount fidelity", popcount_fidelity);
    report(3, "filter effectiveness", [&] { return filter_effectiveness(u); });
    report(4, "bit-operation speedup", [&] { return scan_speedup(u); });
    report(5, "radius grouping", [&] { return radius_grouping(u); });
    u.engine.reset();
    report(6, "permutation optimization", permutation_optimization);
    report(7, "k-NN correctness", [&] { return knn_correctness(sh); });
    report(8, "persistence", [&] { return persistence(sh); });
    report(9, "interface equivalence", [&] { return interface_equivalence(sh); });

    std::error_code ec;
    fs::remove_all(sh.dir, ec);
    std::printf("%s: %d of 9 criteria failed\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}

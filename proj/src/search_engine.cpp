/*
 * SPDX-License-Identifier: Apache-2.0
 */

#include "fenshses/search_engine.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <string>

#include "fenshses/error.hpp"

namespace fenshses {

namespace {

using Clock = std::chrono::steady_clock;

double micros_since(Clock::time_point start) {
    return std::chrono::duration<double, std::micro>(Clock::now() - start).count();
}

void sort_by_distance(std::vector<Neighbor>& v) {
    std::sort(v.begin(), v.end(), [](const Neighbor& a, const Neighbor& b) {
        return a.distance != b.distance ? a.distance < b.distance : a.id < b.id;
    });
}

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

}  // namespace

std::string_view to_string(SearchStrategy s) {
    switch (s) {
        case SearchStrategy::TermMatch:
            return "TermMatch";
        case SearchStrategy::BitOpScan:
            return "BitOpScan";
        case SearchStrategy::Filtered:
            return "Filtered";
        case SearchStrategy::FilteredPermuted:
            return "FilteredPermuted";
    }
    return "?";
}

SearchStrategy parse_strategy(std::string_view name) {
    const std::string n = lower(name);
    if (n == "termmatch" || n == "term") return SearchStrategy::TermMatch;
    if (n == "bitopscan" || n == "scan") return SearchStrategy::BitOpScan;
    if (n == "filtered") return SearchStrategy::Filtered;
    if (n == "filteredpermuted" || n == "permuted") return SearchStrategy::FilteredPermuted;
    throw InvalidArgument("unknown strategy '" + std::string(name) + "'");
}

SearchEngine::SearchEngine(Parts parts) : parts_(std::move(parts)) {
    if (!parts_.dataset) {
        throw InvalidArgument("search engine needs a dataset");
    }
    const auto& ds = *parts_.dataset;
    if (parts_.term_match &&
        (parts_.term_match->code_length() != ds.code_length() || parts_.term_match->size() != ds.size())) {
        throw InvalidArgument("term-match postings do not match the dataset");
    }
    if (parts_.filtered && &parts_.filtered->dataset() != &ds &&
        parts_.filtered->dataset().content_hash() != ds.content_hash()) {
        throw InvalidArgument("filtered index was built over a different dataset");
    }
    if (parts_.permuted) {
        const auto& p = *parts_.permuted;
        if (p.permutation.size() != ds.code_length() || p.index.dataset().size() != ds.size()) {
            throw InvalidArgument("permuted index does not match the dataset");
        }
        if (p.index.permutation_hash() != p.permutation.hash()) {
            throw InvalidArgument("permuted index was built with a different permutation");
        }
        permuter_.emplace(p.permutation);
    }
}

SearchEngine SearchEngine::build(std::shared_ptr<const CodeDataset> ds, const EngineOptions& opts) {
    if (!ds) {
        throw InvalidArgument("search engine needs a dataset");
    }
    Parts parts;
    parts.dataset = ds;
    parts.exec = opts.exec;
    const auto layout = SubCodeLayout::from_width(ds->code_length(), opts.filter_width);
    if (opts.build_term_match) {
        parts.term_match = PositionPostings::build(*ds);
    }
    if (opts.build_filtered) {
        parts.filtered = SubcodeIndex::build(ds, layout);
    }
    if (opts.build_permuted) {
        Permutation perm = opts.permutation ? *opts.permutation
                                            : kernighan_lin(estimate_correlations(*ds), layout, opts.kl);
        auto permuted_ds = std::make_shared<const CodeDataset>(apply_permutation(*ds, perm));
        SubcodeIndex index = SubcodeIndex::build(permuted_ds, layout, perm.hash());
        parts.permuted = PermutedIndex{std::move(perm), std::move(index)};
    }
    return SearchEngine(std::move(parts));
}

bool SearchEngine::supports(SearchStrategy s) const {
    switch (s) {
        case SearchStrategy::TermMatch:
            return parts_.term_match.has_value();
        case SearchStrategy::BitOpScan:
            return true;
        case SearchStrategy::Filtered:
            return parts_.filtered.has_value();
        case SearchStrategy::FilteredPermuted:
            return parts_.permuted.has_value();
    }
    return false;
}

SearchStrategy SearchEngine::default_strategy() const {
    if (parts_.permuted) return SearchStrategy::FilteredPermuted;
    if (parts_.filtered) return SearchStrategy::Filtered;
    return SearchStrategy::BitOpScan;
}

std::optional<SubCodeLayout> SearchEngine::filter_layout() const {
    if (parts_.permuted) return parts_.permuted->index.layout();
    if (parts_.filtered) return parts_.filtered->layout();
    return std::nullopt;
}

void SearchEngine::check_query(SearchStrategy s, const BinaryCode& q) const {
    if (!supports(s)) {
        throw NotReadyError(std::string("strategy ") + std::string(to_string(s)) + " is not available in this engine");
    }
    if (q.length() != code_length()) {
        throw InvalidArgument("query has m=" + std::to_string(q.length()) + ", engine has m=" +
                              std::to_string(code_length()));
    }
}

SearchResult SearchEngine::r_neighbor_search(SearchStrategy s, const BinaryCode& q, uint32_t r) const {
    check_query(s, q);
    if (r > code_length()) {
        throw InvalidArgument("radius " + std::to_string(r) + " exceeds m=" + std::to_string(code_length()));
    }
    const auto start = Clock::now();
    SearchResult out;
    switch (s) {
        case SearchStrategy::TermMatch: {
            out.neighbors = term_match_search(*parts_.term_match, q, r, parts_.exec).neighbors;
            out.candidate_count = size();
            break;
        }
        case SearchStrategy::BitOpScan: {
            if (parts_.exec == Execution::parallel) {
                kernels::omp::scan_radius(dataset().packed(), q.words(), r, out.neighbors);
            } else {
                kernels::serial::scan_radius(dataset().packed(), q.words(), r, out.neighbors);
            }
            out.candidate_count = size();
            break;
        }
        case SearchStrategy::Filtered: {
            auto res = parts_.filtered->filtered_search(q.words(), r, parts_.exec);
            out.neighbors = std::move(res.neighbors);
            out.candidate_count = res.candidate_count;
            break;
        }
        case SearchStrategy::FilteredPermuted: {
            std::vector<uint64_t> pq(dataset().stride());
            permuter_->apply(q.words(), pq);
            auto res = parts_.permuted->index.filtered_search(pq, r, parts_.exec);
            out.neighbors = std::move(res.neighbors);
            out.candidate_count = res.candidate_count;
            break;
        }
    }
    sort_by_distance(out.neighbors);
    out.elapsed_us = micros_since(start);
    return out;
}

SearchResult SearchEngine::knn_search(SearchStrategy s, const BinaryCode& q, size_t k) const {
    check_query(s, q);
    if (k == 0) {
        throw InvalidArgument("k must be at least 1");
    }
    const auto start = Clock::now();
    const uint32_t m = code_length();
    const size_t n = size();
    const size_t want = std::min(k, n);

    // Distances computed so far in this call; -1 = not yet verified.
    std::vector<int32_t> dist(n, -1);
    std::vector<CodeId> computed;
    std::vector<size_t> histogram(m + 1, 0);
    auto record = [&](CodeId id, uint32_t d) {
        if (dist[id] < 0) {
            dist[id] = static_cast<int32_t>(d);
            computed.push_back(id);
            ++histogram[d];
        }
    };

    const SubcodeIndex* index = nullptr;
    std::span<const uint64_t> qwords = q.words();
    std::vector<uint64_t> permuted_query;
    if (s == SearchStrategy::Filtered) {
        index = &*parts_.filtered;
    } else if (s == SearchStrategy::FilteredPermuted) {
        index = &parts_.permuted->index;
        permuted_query.resize(dataset().stride());
        permuter_->apply(q.words(), permuted_query);
        qwords = permuted_query;
    }

    int64_t fetched_ball = -1;  // floor(r/s) of the last candidate fetch
    uint32_t r = 0;
    for (;; ++r) {
        if (index != nullptr) {
            const auto ball = static_cast<int64_t>(r / index->layout().segment_count());
            if (ball != fetched_ball) {
                fetched_ball = ball;
                for (CodeId id : index->candidate_ids(qwords, r)) {
                    if (dist[id] < 0) {
                        record(id, hamming_words(index->dataset().words(id), qwords));
                    }
                }
            }
        } else if (computed.empty()) {
            // Linear strategies see every code on the first radius anyway.
            if (s == SearchStrategy::TermMatch) {
                for (const auto& nb : term_match_search(*parts_.term_match, q, m, parts_.exec).neighbors) {
                    record(nb.id, nb.distance);
                }
            } else {
                std::vector<Neighbor> all;
                if (parts_.exec == Execution::parallel) {
                    kernels::omp::scan_radius(dataset().packed(), q.words(), m, all);
                } else {
                    kernels::serial::scan_radius(dataset().packed(), q.words(), m, all);
                }
                for (const auto& nb : all) record(nb.id, nb.distance);
            }
        }
        size_t within = 0;
        for (uint32_t d = 0; d <= r; ++d) within += histogram[d];
        if (within >= want || r == m) break;
    }

    SearchResult out;
    out.candidate_count = computed.size();
    for (CodeId id : computed) {
        if (static_cast<uint32_t>(dist[id]) <= r) {
            out.neighbors.push_back({id, static_cast<uint32_t>(dist[id])});
        }
    }
    sort_by_distance(out.neighbors);
    out.neighbors.resize(std::min(out.neighbors.size(), want));
    out.elapsed_us = micros_since(start);
    return out;
}

}  // namespace fenshses

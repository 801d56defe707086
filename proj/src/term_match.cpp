/*
 * SPDX-License-Identifier: Apache-2.0
 */

#include "fenshses/term_match.hpp"

#include <limits>
#include <string>

#include "fenshses/error.hpp"

namespace fenshses {

PositionPostings PositionPostings::build(const CodeDataset& ds) {
    const uint32_t m = ds.code_length();
    const size_t n = ds.size();
    if (m > std::numeric_limits<uint16_t>::max()) {
        throw InvalidArgument("term match supports m up to 65535");
    }
    PositionPostings pp(m, n);
    pp.ones_count_.assign(m, 0);
    for (size_t i = 0; i < n; ++i) {
        const auto w = ds.words(i);
        for (uint32_t p = 0; p < m; ++p) {
            pp.ones_count_[p] += (w[p / 64] >> (p % 64)) & 1u;
        }
    }

    pp.ids_.resize(static_cast<size_t>(m) * n);
    std::vector<size_t> one_cursor(m);
    std::vector<size_t> zero_cursor(m);
    for (uint32_t p = 0; p < m; ++p) {
        one_cursor[p] = static_cast<size_t>(p) * n;
        zero_cursor[p] = one_cursor[p] + pp.ones_count_[p];
    }
    // Ids are appended in increasing order, so every list comes out sorted.
    for (size_t i = 0; i < n; ++i) {
        const auto w = ds.words(i);
        for (uint32_t p = 0; p < m; ++p) {
            auto& cursor = ((w[p / 64] >> (p % 64)) & 1u) ? one_cursor[p] : zero_cursor[p];
            pp.ids_[cursor++] = static_cast<CodeId>(i);
        }
    }
    return pp;
}

TermMatchResult term_match_search(const PositionPostings& pp, const BinaryCode& query, uint32_t r,
                                  Execution exec) {
    const uint32_t m = pp.code_length();
    if (query.length() != m) {
        throw InvalidArgument("query has m=" + std::to_string(query.length()) + ", index has m=" +
                              std::to_string(m));
    }
    if (r > m) {
        throw InvalidArgument("radius " + std::to_string(r) + " exceeds m=" + std::to_string(m));
    }

    std::vector<std::span<const CodeId>> lists;
    lists.reserve(m);
    for (uint32_t p = 0; p < m; ++p) {
        lists.push_back(query.bit(p) ? pp.ones(p) : pp.zeros(p));
    }

    std::vector<uint16_t> matches(pp.size(), 0);
    if (exec == Execution::parallel) {
        kernels::omp::accumulate_postings(lists, matches);
    } else {
        kernels::serial::accumulate_postings(lists, matches);
    }

    TermMatchResult result;
    result.lists_visited = static_cast<uint32_t>(lists.size());
    const uint32_t min_score = m - r;
    for (size_t id = 0; id < matches.size(); ++id) {
        if (matches[id] >= min_score) {
            result.neighbors.push_back({static_cast<CodeId>(id), m - matches[id]});
        }
    }
    return result;
}

}  // namespace fenshses

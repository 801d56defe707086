/*
 * SPDX-License-Identifier: Apache-2.0
 */

#include "fenshses/kernels.hpp"

namespace fenshses::kernels::serial {

void scan_radius(PackedCodes codes, std::span<const uint64_t> query, uint32_t r,
                 std::vector<Neighbor>& out) {
    const size_t n = codes.size();
    for (size_t i = 0; i < n; ++i) {
        const uint32_t d = hamming_words(codes.code(i), query);
        if (d <= r) {
            out.push_back({static_cast<CodeId>(i), d});
        }
    }
}

void verify_candidates(PackedCodes codes, std::span<const uint64_t> query,
                       std::span<const CodeId> candidates, uint32_t r, std::vector<Neighbor>& out) {
    for (CodeId id : candidates) {
        const uint32_t d = hamming_words(codes.code(id), query);
        if (d <= r) {
            out.push_back({id, d});
        }
    }
}

void accumulate_postings(std::span<const std::span<const CodeId>> lists, std::span<uint16_t> counts) {
    for (auto list : lists) {
        for (CodeId id : list) {
            ++counts[id];
        }
    }
}

void column_cooccurrence(std::span<const uint64_t> columns, size_t stride, size_t column_count,
                         std::span<uint64_t> out) {
    for (size_t i = 0; i < column_count; ++i) {
        const auto ci = columns.subspan(i * stride, stride);
        for (size_t j = i; j < column_count; ++j) {
            const auto cj = columns.subspan(j * stride, stride);
            uint64_t c = 0;
            for (size_t w = 0; w < stride; ++w) {
                c += static_cast<uint64_t>(popcount64(ci[w] & cj[w]));
            }
            out[i * column_count + j] = c;
            out[j * column_count + i] = c;
        }
    }
}

}  // namespace fenshses::kernels::serial

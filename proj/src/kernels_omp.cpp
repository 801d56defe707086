/*
 * SPDX-License-Identifier: Apache-2.0
 */

#include "fenshses/kernels.hpp"

#include <algorithm>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fenshses::kernels::omp {

namespace {

// Below this many codes a parallel region costs more than it saves.
constexpr size_t kParallelThreshold = 1 << 14;

// Thread t handles the contiguous block [begin(t), begin(t + 1)) so that
// concatenating per-thread results keeps ascending id order.
struct Blocks {
    size_t n;
    size_t parts;
    size_t begin(size_t t) const {
        return n * t / parts;
    }
};

}  // namespace

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void scan_radius(PackedCodes codes, std::span<const uint64_t> query, uint32_t r,
                 std::vector<Neighbor>& out) {
    const size_t n = codes.size();
    const size_t parts = n < kParallelThreshold ? 1 : static_cast<size_t>(max_threads());
    std::vector<std::vector<Neighbor>> local(parts);
    const Blocks blocks{n, parts};

#pragma omp parallel for schedule(static, 1) if (parts > 1)
    for (size_t t = 0; t < parts; ++t) {
        auto& dst = local[t];
        for (size_t i = blocks.begin(t); i < blocks.begin(t + 1); ++i) {
            const uint32_t d = hamming_words(codes.code(i), query);
            if (d <= r) {
                dst.push_back({static_cast<CodeId>(i), d});
            }
        }
    }
    for (auto& part : local) {
        out.insert(out.end(), part.begin(), part.end());
    }
}

void verify_candidates(PackedCodes codes, std::span<const uint64_t> query,
                       std::span<const CodeId> candidates, uint32_t r, std::vector<Neighbor>& out) {
    const size_t n = candidates.size();
    const size_t parts = n < kParallelThreshold ? 1 : static_cast<size_t>(max_threads());
    std::vector<std::vector<Neighbor>> local(parts);
    const Blocks blocks{n, parts};

#pragma omp parallel for schedule(static, 1) if (parts > 1)
    for (size_t t = 0; t < parts; ++t) {
        auto& dst = local[t];
        for (size_t k = blocks.begin(t); k < blocks.begin(t + 1); ++k) {
            const CodeId id = candidates[k];
            const uint32_t d = hamming_words(codes.code(id), query);
            if (d <= r) {
                dst.push_back({id, d});
            }
        }
    }
    for (auto& part : local) {
        out.insert(out.end(), part.begin(), part.end());
    }
}

void accumulate_postings(std::span<const std::span<const CodeId>> lists, std::span<uint16_t> counts) {
    const size_t n = counts.size();
    const size_t parts = n < kParallelThreshold ? 1 : static_cast<size_t>(max_threads());
    const Blocks blocks{n, parts};

    // Each thread owns an id range of the accumulator and walks the matching
    // slice of every sorted list, so no two threads touch the same counter.
#pragma omp parallel for schedule(static, 1) if (parts > 1)
    for (size_t t = 0; t < parts; ++t) {
        const auto lo = static_cast<CodeId>(blocks.begin(t));
        const auto hi = static_cast<CodeId>(blocks.begin(t + 1));
        for (auto list : lists) {
            auto first = std::lower_bound(list.begin(), list.end(), lo);
            auto last = std::lower_bound(first, list.end(), hi);
            for (auto it = first; it != last; ++it) {
                ++counts[*it];
            }
        }
    }
}

void column_cooccurrence(std::span<const uint64_t> columns, size_t stride, size_t column_count,
                         std::span<uint64_t> out) {
    const auto cols = static_cast<long>(column_count);
#pragma omp parallel for schedule(dynamic, 1)
    for (long i = 0; i < cols; ++i) {
        const auto ci = columns.subspan(static_cast<size_t>(i) * stride, stride);
        for (size_t j = static_cast<size_t>(i); j < column_count; ++j) {
            const auto cj = columns.subspan(j * stride, stride);
            uint64_t c = 0;
            for (size_t w = 0; w < stride; ++w) {
                c += static_cast<uint64_t>(popcount64(ci[w] & cj[w]));
            }
            out[static_cast<size_t>(i) * column_count + j] = c;
            out[j * column_count + static_cast<size_t>(i)] = c;
        }
    }
}

}  // namespace fenshses::kernels::omp

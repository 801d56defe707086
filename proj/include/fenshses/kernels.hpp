/*
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fenshses/binary_code.hpp"

namespace fenshses {

/// Selects the serial reference kernels or their OpenMP counterparts.
enum class Execution { serial, parallel };

struct Neighbor {
    CodeId id;
    uint32_t distance;

    friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Row-major packed codes: code i occupies words [i * stride, (i + 1) * stride).
struct PackedCodes {
    std::span<const uint64_t> words;
    size_t stride;

    size_t size() const {
        return stride == 0 ? 0 : words.size() / stride;
    }
    std::span<const uint64_t> code(size_t i) const {
        return words.subspan(i * stride, stride);
    }
};

// Each kernel exists twice with identical signatures and results: `serial` is
// the reference, `omp` the OpenMP version. Outputs are in ascending id order
// in both, so results compare with operator==.

namespace kernels::serial {

/// Appends every code within distance r of `query`.
void scan_radius(PackedCodes codes, std::span<const uint64_t> query, uint32_t r,
                 std::vector<Neighbor>& out);

/// Like scan_radius but only over `candidates` (ascending ids).
void verify_candidates(PackedCodes codes, std::span<const uint64_t> query,
                       std::span<const CodeId> candidates, uint32_t r, std::vector<Neighbor>& out);

/// counts[id] += 1 for every id in every list. Lists must be sorted ascending.
void accumulate_postings(std::span<const std::span<const CodeId>> lists, std::span<uint16_t> counts);

/// Column bitsets: column c occupies words [c * stride, (c + 1) * stride).
/// Writes popcount(col_i & col_j) into out[i * columns + j] for all i, j.
void column_cooccurrence(std::span<const uint64_t> columns, size_t stride, size_t column_count,
                         std::span<uint64_t> out);

}  // namespace kernels::serial

namespace kernels::omp {

void scan_radius(PackedCodes codes, std::span<const uint64_t> query, uint32_t r,
                 std::vector<Neighbor>& out);

void verify_candidates(PackedCodes codes, std::span<const uint64_t> query,
                       std::span<const CodeId> candidates, uint32_t r, std::vector<Neighbor>& out);

void accumulate_postings(std::span<const std::span<const CodeId>> lists, std::span<uint16_t> counts);

void column_cooccurrence(std::span<const uint64_t> columns, size_t stride, size_t column_count,
                         std::span<uint64_t> out);

/// Number of threads an OpenMP parallel region would use (1 without OpenMP).
int max_threads();

}  // namespace kernels::omp

}  // namespace fenshses

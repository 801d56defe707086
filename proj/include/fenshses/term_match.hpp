/*
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fenshses/code_store.hpp"
#include "fenshses/kernels.hpp"

namespace fenshses {

/// Per-position posting lists of the codes holding a 1 (ones) and a 0 (zeros)
/// at that position. For every position the two lists partition 0..n-1 and
/// both are sorted ascending.
class PositionPostings {
   public:
    static PositionPostings build(const CodeDataset& ds);

    uint32_t code_length() const {
        return m_;
    }
    size_t size() const {
        return n_;
    }
    std::span<const CodeId> ones(uint32_t position) const {
        return block(position).first(ones_count_[position]);
    }
    std::span<const CodeId> zeros(uint32_t position) const {
        return block(position).subspan(ones_count_[position]);
    }

   private:
    PositionPostings(uint32_t m, size_t n) : m_(m), n_(n) {}

    // Position p owns ids_[p*n, (p+1)*n): its ones list, then its zeros list.
    std::span<const CodeId> block(uint32_t position) const {
        return std::span<const CodeId>(ids_).subspan(static_cast<size_t>(position) * n_, n_);
    }

    uint32_t m_;
    size_t n_;
    std::vector<uint32_t> ones_count_;
    std::vector<CodeId> ids_;
};

struct TermMatchResult {
    std::vector<Neighbor> neighbors;  // ascending id
    uint32_t lists_visited = 0;       // always m
};

/// Distance by term matching: score each code by how many of the query's
/// one-positions and zero-positions it shares, then report every code with
/// m - score <= r. Throws InvalidArgument when r > m or lengths differ.
TermMatchResult term_match_search(const PositionPostings& pp, const BinaryCode& query, uint32_t r,
                                  Execution exec = Execution::serial);

}  // namespace fenshses

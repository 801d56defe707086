/*
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "fenshses/binary_code.hpp"
#include "fenshses/code_store.hpp"
#include "fenshses/kernels.hpp"

namespace fenshses {

/// m x m absolute Pearson correlations between bit columns, row-major.
class CorrelationMatrix {
   public:
    /// Validates shape, symmetry (1e-12) and range [0, 1].
    CorrelationMatrix(uint32_t m, std::vector<double> values);

    static CorrelationMatrix identity(uint32_t m);

    uint32_t size() const {
        return m_;
    }
    double operator()(uint32_t i, uint32_t j) const {
        return values_[static_cast<size_t>(i) * m_ + j];
    }
    std::span<const double> row(uint32_t i) const {
        return std::span<const double>(values_).subspan(static_cast<size_t>(i) * m_, m_);
    }
    std::span<const double> values() const {
        return values_;
    }

    /// Columns that were constant in the estimation sample; their rows and
    /// columns (diagonal included) are zero.
    const std::vector<uint32_t>& constant_columns() const {
        return constant_columns_;
    }

   private:
    friend CorrelationMatrix estimate_correlations(const CodeDataset&, Execution);
    uint32_t m_;
    std::vector<double> values_;
    std::vector<uint32_t> constant_columns_;
};

/// |corr(bit_i, bit_j)| over all codes. Throws InsufficientDataError for n < 2.
CorrelationMatrix estimate_correlations(const CodeDataset& ds, Execution exec = Execution::parallel);

/// Position p of a permuted code takes bit mapping[p] of the original.
class Permutation {
   public:
    /// Throws InvalidArgument unless `mapping` is a bijection on [0, size).
    explicit Permutation(std::vector<uint32_t> mapping);
    static Permutation identity(uint32_t m);

    uint32_t size() const {
        return static_cast<uint32_t>(mapping_.size());
    }
    uint32_t operator[](uint32_t p) const {
        return mapping_[p];
    }
    std::span<const uint32_t> mapping() const {
        return mapping_;
    }
    Permutation inverse() const;
    uint64_t hash() const;

    /// Swaps the sources of two positions.
    void swap_positions(uint32_t a, uint32_t b) {
        std::swap(mapping_[a], mapping_[b]);
    }

    friend bool operator==(const Permutation&, const Permutation&) = default;

   private:
    std::vector<uint32_t> mapping_;
};

/// Sidecar text file: "m=<int>" then the space-separated mapping.
void save_permutation(const Permutation& perm, const std::filesystem::path& path);
Permutation load_permutation(const std::filesystem::path& path);

/// Segment id of each position; the block-diagonal all-ones mask of the
/// objective, stored as labels.
class BlockMask {
   public:
    explicit BlockMask(const SubCodeLayout& layout);

    uint32_t size() const {
        return static_cast<uint32_t>(segment_.size());
    }
    uint32_t segment_count() const {
        return segment_count_;
    }
    uint32_t segment_of(uint32_t position) const {
        return segment_[position];
    }
    bool same_block(uint32_t p, uint32_t q) const {
        return segment_[p] == segment_[q];
    }

   private:
    std::vector<uint32_t> segment_;
    uint32_t segment_count_;
};

/// Sum of M[perm[p]][perm[q]] over all position pairs (p, q) in the same
/// block, diagonal included.
double objective(const CorrelationMatrix& M, const Permutation& perm, const BlockMask& mask);

struct KernighanLinOptions {
    uint64_t seed = 0;          // 0: lowest index wins ties; otherwise seeded tie-break
    uint32_t max_passes = 100;
    double tolerance = 1e-12;   // minimum gain for a swap to be accepted
};

struct KernighanLinTrace {
    Permutation permutation;
    std::vector<double> objective_after_swap;  // recomputed exactly, one per accepted swap
    double initial_objective = 0;
    double final_objective = 0;
    uint32_t passes = 0;
};

/// Local search for a permutation that lowers objective(): repeated passes
/// over positions, each moving a position to the cross-block partner with
/// the largest gain, until a pass accepts nothing.
Permutation kernighan_lin(const CorrelationMatrix& M, const SubCodeLayout& layout,
                          const KernighanLinOptions& opts = {});
KernighanLinTrace kernighan_lin_traced(const CorrelationMatrix& M, const SubCodeLayout& layout,
                                       const KernighanLinOptions& opts = {});

/// Reorders bits by table lookup: one table per source byte, 256 entries of
/// output words each.
class BitPermuter {
   public:
    explicit BitPermuter(const Permutation& perm);

    uint32_t code_length() const {
        return m_;
    }
    /// out must hold words_for_bits(m) words; it is overwritten.
    void apply(std::span<const uint64_t> in, std::span<uint64_t> out) const;
    BinaryCode apply(const BinaryCode& code) const;

   private:
    uint32_t m_;
    size_t stride_;
    size_t source_bytes_;
    std::vector<uint64_t> table_;  // [source byte][byte value][stride]
};

/// c'[p] = c[perm[p]] for every code. Throws InvalidArgument on length mismatch.
CodeDataset apply_permutation(const CodeDataset& ds, const Permutation& perm);

}  // namespace fenshses

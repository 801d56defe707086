/*
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fenshses/code_store.hpp"
#include "fenshses/kernels.hpp"
#include "fenshses/permutation.hpp"
#include "fenshses/subcode_index.hpp"
#include "fenshses/term_match.hpp"

namespace fenshses {

enum class SearchStrategy { TermMatch, BitOpScan, Filtered, FilteredPermuted };

inline constexpr std::array<SearchStrategy, 4> kAllStrategies = {
        SearchStrategy::TermMatch, SearchStrategy::BitOpScan, SearchStrategy::Filtered,
        SearchStrategy::FilteredPermuted};

std::string_view to_string(SearchStrategy s);

/// Accepts the enum names case-insensitively, plus the short forms
/// "term", "scan", "filtered", "permuted". Throws InvalidArgument.
SearchStrategy parse_strategy(std::string_view name);

struct SearchResult {
    std::vector<Neighbor> neighbors;  // sorted by (distance, id)
    size_t candidate_count = 0;
    double elapsed_us = 0;
};

struct EngineOptions {
    uint32_t filter_width = 16;
    bool build_term_match = true;
    bool build_filtered = true;
    bool build_permuted = true;
    /// Used for FilteredPermuted; estimated with kernighan_lin when absent.
    std::optional<Permutation> permutation;
    KernighanLinOptions kl;
    Execution exec = Execution::serial;
};

/// Holds a dataset plus whichever search structures were built over it, and
/// answers exact r-neighbor and k-NN queries with any available strategy.
/// Immutable after construction; safe for concurrent queries.
class SearchEngine {
   public:
    struct PermutedIndex {
        Permutation permutation;
        SubcodeIndex index;  // over the permuted dataset
    };

    /// Components assembled elsewhere (e.g. loaded from FIDX files).
    struct Parts {
        std::shared_ptr<const CodeDataset> dataset;
        std::optional<PositionPostings> term_match;
        std::optional<SubcodeIndex> filtered;
        std::optional<PermutedIndex> permuted;
        Execution exec = Execution::serial;
    };

    explicit SearchEngine(Parts parts);

    static SearchEngine build(std::shared_ptr<const CodeDataset> ds, const EngineOptions& opts = {});

    bool supports(SearchStrategy s) const;

    /// FilteredPermuted when available, then Filtered, then BitOpScan.
    SearchStrategy default_strategy() const;

    /// Exact B_H(q, r). Throws InvalidArgument for a bad query or radius and
    /// NotReadyError when the strategy's structures were not built.
    SearchResult r_neighbor_search(SearchStrategy s, const BinaryCode& q, uint32_t r) const;

    /// The k nearest codes by (distance, id), found by growing the radius
    /// from 0 until at least k codes are within it.
    SearchResult knn_search(SearchStrategy s, const BinaryCode& q, size_t k) const;

    const CodeDataset& dataset() const {
        return *parts_.dataset;
    }
    uint32_t code_length() const {
        return parts_.dataset->code_length();
    }
    size_t size() const {
        return parts_.dataset->size();
    }
    /// Filter layout of whichever filtered index exists.
    std::optional<SubCodeLayout> filter_layout() const;
    bool permuted() const {
        return parts_.permuted.has_value();
    }
    const std::optional<PermutedIndex>& permuted_index() const {
        return parts_.permuted;
    }
    const std::optional<SubcodeIndex>& filtered_index() const {
        return parts_.filtered;
    }

   private:
    void check_query(SearchStrategy s, const BinaryCode& q) const;

    Parts parts_;
    std::optional<BitPermuter> permuter_;
};

}  // namespace fenshses

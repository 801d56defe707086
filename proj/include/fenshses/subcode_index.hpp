/*
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "fenshses/binary_code.hpp"
#include "fenshses/code_store.hpp"
#include "fenshses/kernels.hpp"

namespace fenshses {

/// Largest filter segment width; balls over wider values get impractical.
constexpr uint32_t kMaxFilterWidth = 32;

/// Number of w-bit values within distance t of any center: sum_{j<=t} C(w, j).
uint64_t ball_size(uint32_t w, uint32_t t);

/// All w-bit values within Hamming distance t of `center`, ordered by
/// distance and then by value. Throws InvalidArgument if t > w or w > 64.
std::vector<uint64_t> enumerate_ball(uint64_t center, uint32_t w, uint32_t t);

/// Calls fn(mask) for every w-bit mask of popcount <= t, grouped by popcount
/// (ascending masks within a group). Used on the query path to avoid
/// materializing the ball.
void for_each_ball_mask(uint32_t w, uint32_t t, const std::function<void(uint64_t)>& fn);

struct FilteredResult {
    std::vector<Neighbor> neighbors;  // ascending id
    size_t candidate_count = 0;       // codes whose full distance was computed
};

/// File paths recorded in FIDX so a query tool can find the codes again.
struct IndexSources {
    std::string dataset_path;
    std::string permutation_path;  // empty when the index is unpermuted

    friend bool operator==(const IndexSources&, const IndexSources&) = default;
};

/// Inverted index from (segment, sub-code value) to the sorted ids of codes
/// holding that value. Answers r-neighbor queries exactly by pigeonhole
/// filtering: every r-neighbor agrees with the query to within floor(r/s)
/// bits in at least one of the s segments.
class SubcodeIndex {
   public:
    class Builder;

    /// Throws InvalidArgument when the layout does not match the dataset or
    /// its width exceeds kMaxFilterWidth.
    static SubcodeIndex build(std::shared_ptr<const CodeDataset> ds, const SubCodeLayout& layout,
                              uint64_t permutation_hash = 0);

    const SubCodeLayout& layout() const {
        return layout_;
    }
    const CodeDataset& dataset() const {
        return *dataset_;
    }
    const std::shared_ptr<const CodeDataset>& dataset_ptr() const {
        return dataset_;
    }
    uint64_t permutation_hash() const {
        return permutation_hash_;
    }
    const IndexSources& sources() const {
        return sources_;
    }
    void set_sources(IndexSources s) {
        sources_ = std::move(s);
    }

    /// Ids whose sub-code in `segment` equals `value` (empty if none).
    std::span<const CodeId> postings(uint32_t segment, uint64_t value) const;

    /// Observed values of a segment in ascending order.
    std::span<const uint64_t> values(uint32_t segment) const {
        return segments_[segment].values;
    }

    /// Union over segments of the postings within the per-segment ball of
    /// radius floor(r/s). Ascending, deduplicated.
    std::vector<CodeId> candidates(const BinaryCode& query, uint32_t r) const;

    /// Unsorted candidate ids for a packed query (no validation beyond size).
    std::vector<CodeId> candidate_ids(std::span<const uint64_t> query, uint32_t r) const;

    /// Verified r-neighbors (ascending id) plus the candidate count.
    FilteredResult filtered_search(const BinaryCode& query, uint32_t r,
                                   Execution exec = Execution::serial) const;

    /// Same as filtered_search, for a query already given as packed words.
    FilteredResult filtered_search(std::span<const uint64_t> query, uint32_t r,
                                   Execution exec = Execution::serial) const;

    /// FIDX persistence. load() checks that `ds` is the dataset the index was
    /// built over (m, n and content hash) and throws FormatError otherwise.
    void save(const std::filesystem::path& path) const;
    static SubcodeIndex load(const std::filesystem::path& path, std::shared_ptr<const CodeDataset> ds);

    /// Reads only the FIDX header fields (no postings, no dataset needed).
    struct Header {
        uint32_t m;
        uint64_t n;
        uint32_t segment_count;
        uint32_t width;
        uint64_t permutation_hash;
        uint64_t dataset_hash;
        IndexSources sources;
    };
    static Header read_header(const std::filesystem::path& path);

    /// Structural equality: layout, hashes, sources and every posting list.
    bool same_postings(const SubcodeIndex& other) const;

   private:
    struct Segment {
        uint32_t width = 0;
        std::vector<uint64_t> values;    // ascending, distinct
        std::vector<uint32_t> offsets;   // values.size() + 1 offsets into ids
        std::vector<CodeId> ids;         // grouped by value, ascending within a group
        std::vector<uint32_t> dense;     // 2^width + 1 offsets when width is small
        std::unordered_map<uint64_t, uint32_t> slot;  // value -> index into values otherwise

        std::span<const CodeId> lookup(uint64_t value) const;
    };

    SubcodeIndex(std::shared_ptr<const CodeDataset> ds, const SubCodeLayout& layout, uint64_t perm_hash)
            : dataset_(std::move(ds)), layout_(layout), permutation_hash_(perm_hash) {}

    void finalize_segment(Segment& seg) const;
    void collect_candidates(std::span<const uint64_t> query, uint32_t r, std::vector<CodeId>& out) const;

    std::shared_ptr<const CodeDataset> dataset_;
    SubCodeLayout layout_;
    uint64_t permutation_hash_;
    IndexSources sources_;
    std::vector<Segment> segments_;
};

/// Single-insert construction path; produces the same index as build()
/// regardless of insertion order.
class SubcodeIndex::Builder {
   public:
    Builder(std::shared_ptr<const CodeDataset> ds, const SubCodeLayout& layout, uint64_t permutation_hash = 0);
    void add(CodeId id);
    SubcodeIndex finish() &&;

   private:
    std::shared_ptr<const CodeDataset> dataset_;
    SubCodeLayout layout_;
    uint64_t permutation_hash_;
    std::vector<std::vector<std::pair<uint64_t, CodeId>>> entries_;
};

}  // namespace fenshses

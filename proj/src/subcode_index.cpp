/*
 * SPDX-License-Identifier: Apache-2.0
 */

#include "fenshses/subcode_index.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "byte_io.hpp"
#include "fenshses/error.hpp"

namespace fenshses {

namespace {

constexpr std::string_view kMagic = "FIDX";
constexpr uint16_t kVersion = 1;
constexpr uint32_t kDenseWidth = 16;

// Gosper's hack over popcount classes 0..t. 128-bit arithmetic keeps w = 64
// from overflowing the "next mask" step.
template <class Fn>
void visit_ball_masks(uint32_t w, uint32_t t, Fn&& fn) {
    using u128 = unsigned __int128;
    const u128 limit = u128{1} << w;
    for (uint32_t j = 0; j <= t && j <= w; ++j) {
        u128 mask = (u128{1} << j) - 1;
        while (mask < limit) {
            fn(static_cast<uint64_t>(mask));
            if (mask == 0) {
                break;
            }
            const u128 low = mask & (~mask + 1);
            const u128 ripple = mask + low;
            mask = (((ripple ^ mask) >> 2) / low) | ripple;
        }
    }
}

using Pairs = std::vector<std::pair<uint64_t, CodeId>>;

// Per-thread bitmap of already-collected ids. Only the bits that were set are
// cleared afterwards, so the cost is proportional to the candidate count.
std::vector<uint64_t>& seen_bitmap(size_t n) {
    thread_local std::vector<uint64_t> bits;
    if (bits.size() < (n + 63) / 64) {
        bits.assign((n + 63) / 64, 0);
    }
    return bits;
}

}  // namespace

uint64_t ball_size(uint32_t w, uint32_t t) {
    uint64_t total = 0;
    uint64_t binom = 1;  // C(w, j)
    for (uint32_t j = 0; j <= t && j <= w; ++j) {
        total += binom;
        binom = binom * (w - j) / (j + 1);
    }
    return total;
}

std::vector<uint64_t> enumerate_ball(uint64_t center, uint32_t w, uint32_t t) {
    if (w == 0 || w > 64) {
        throw InvalidArgument("ball width must be in [1, 64]");
    }
    if (t > w) {
        throw InvalidArgument("ball radius " + std::to_string(t) + " exceeds width " + std::to_string(w));
    }
    if (w < 64 && (center >> w) != 0) {
        throw InvalidArgument("ball center has bits beyond width");
    }
    std::vector<uint64_t> out;
    out.reserve(ball_size(w, t));
    auto group_begin = out.size();
    int group_bits = 0;
    visit_ball_masks(w, t, [&](uint64_t mask) {
        const int bits = std::popcount(mask);
        if (bits != group_bits) {
            std::sort(out.begin() + static_cast<long>(group_begin), out.end());
            group_begin = out.size();
            group_bits = bits;
        }
        out.push_back(center ^ mask);
    });
    std::sort(out.begin() + static_cast<long>(group_begin), out.end());
    return out;
}

void for_each_ball_mask(uint32_t w, uint32_t t, const std::function<void(uint64_t)>& fn) {
    if (w == 0 || w > 64) {
        throw InvalidArgument("ball width must be in [1, 64]");
    }
    visit_ball_masks(w, t, fn);
}

std::span<const CodeId> SubcodeIndex::Segment::lookup(uint64_t value) const {
    if (!dense.empty()) {
        if (value + 1 >= dense.size()) {
            return {};
        }
        return std::span<const CodeId>(ids).subspan(dense[value], dense[value + 1] - dense[value]);
    }
    auto it = slot.find(value);
    if (it == slot.end()) {
        return {};
    }
    const uint32_t k = it->second;
    return std::span<const CodeId>(ids).subspan(offsets[k], offsets[k + 1] - offsets[k]);
}

void SubcodeIndex::finalize_segment(Segment& seg) const {
    seg.slot.clear();
    seg.dense.clear();
    if (seg.width <= kDenseWidth) {
        seg.dense.assign((size_t{1} << seg.width) + 1, 0);
        for (size_t k = 0; k < seg.values.size(); ++k) {
            seg.dense[seg.values[k] + 1] = seg.offsets[k + 1] - seg.offsets[k];
        }
        std::partial_sum(seg.dense.begin(), seg.dense.end(), seg.dense.begin());
    } else {
        seg.slot.reserve(seg.values.size());
        for (size_t k = 0; k < seg.values.size(); ++k) {
            seg.slot.emplace(seg.values[k], static_cast<uint32_t>(k));
        }
    }
}

namespace {

// Fills values/offsets/ids from (value, id) pairs sorted by value then id.
template <class Segment>
void fill_from_sorted(Segment& seg, const Pairs& pairs) {
    seg.values.clear();
    seg.offsets.assign(1, 0);
    seg.ids.resize(pairs.size());
    for (size_t k = 0; k < pairs.size(); ++k) {
        if (k == 0 || pairs[k].first != pairs[k - 1].first) {
            if (k != 0) {
                seg.offsets.push_back(static_cast<uint32_t>(k));
            }
            seg.values.push_back(pairs[k].first);
        }
        seg.ids[k] = pairs[k].second;
    }
    seg.offsets.push_back(static_cast<uint32_t>(pairs.size()));
}

void check_layout(const CodeDataset& ds, const SubCodeLayout& layout) {
    if (layout.total_bits() != ds.code_length()) {
        throw InvalidArgument("filter layout is for m=" + std::to_string(layout.total_bits()) +
                              " but dataset has m=" + std::to_string(ds.code_length()));
    }
    if (layout.width() > kMaxFilterWidth) {
        throw InvalidArgument("filter segment width " + std::to_string(layout.width()) +
                              " exceeds " + std::to_string(kMaxFilterWidth));
    }
}

}  // namespace

SubcodeIndex SubcodeIndex::build(std::shared_ptr<const CodeDataset> ds, const SubCodeLayout& layout,
                                 uint64_t permutation_hash) {
    if (!ds) {
        throw InvalidArgument("build_index: null dataset");
    }
    check_layout(*ds, layout);
    SubcodeIndex idx(ds, layout, permutation_hash);
    const size_t n = ds->size();
    idx.segments_.resize(layout.segment_count());

#pragma omp parallel for schedule(dynamic, 1)
    for (long i = 0; i < static_cast<long>(layout.segment_count()); ++i) {
        const auto seg_no = static_cast<uint32_t>(i);
        Segment& seg = idx.segments_[seg_no];
        seg.width = layout.segment_width(seg_no);
        const uint32_t begin = layout.segment_begin(seg_no);

        Pairs pairs(n);
        for (size_t id = 0; id < n; ++id) {
            pairs[id] = {extract_bits(ds->words(id), begin, seg.width), static_cast<CodeId>(id)};
        }
        // Ids go in ascending, so a stable sort by value leaves each group sorted.
        std::stable_sort(pairs.begin(), pairs.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        fill_from_sorted(seg, pairs);
        idx.finalize_segment(seg);
    }
    return idx;
}

SubcodeIndex::Builder::Builder(std::shared_ptr<const CodeDataset> ds, const SubCodeLayout& layout,
                               uint64_t permutation_hash)
        : dataset_(std::move(ds)), layout_(layout), permutation_hash_(permutation_hash) {
    if (!dataset_) {
        throw InvalidArgument("index builder: null dataset");
    }
    check_layout(*dataset_, layout_);
    entries_.resize(layout_.segment_count());
}

void SubcodeIndex::Builder::add(CodeId id) {
    if (id >= dataset_->size()) {
        throw InvalidArgument("index builder: id " + std::to_string(id) + " out of range");
    }
    const auto words = dataset_->words(id);
    for (uint32_t i = 0; i < layout_.segment_count(); ++i) {
        entries_[i].emplace_back(extract_bits(words, layout_.segment_begin(i), layout_.segment_width(i)), id);
    }
}

SubcodeIndex SubcodeIndex::Builder::finish() && {
    SubcodeIndex idx(dataset_, layout_, permutation_hash_);
    idx.segments_.resize(layout_.segment_count());
    for (uint32_t i = 0; i < layout_.segment_count(); ++i) {
        auto& pairs = entries_[i];
        std::sort(pairs.begin(), pairs.end());
        if (std::adjacent_find(pairs.begin(), pairs.end()) != pairs.end()) {
            throw InvalidArgument("index builder: an id was added twice");
        }
        if (pairs.size() != dataset_->size()) {
            throw InvalidArgument("index builder: " + std::to_string(pairs.size()) + " of " +
                                  std::to_string(dataset_->size()) + " codes added");
        }
        Segment& seg = idx.segments_[i];
        seg.width = layout_.segment_width(i);
        fill_from_sorted(seg, pairs);
        idx.finalize_segment(seg);
    }
    return idx;
}

std::span<const CodeId> SubcodeIndex::postings(uint32_t segment, uint64_t value) const {
    if (segment >= segments_.size()) {
        throw InvalidArgument("segment " + std::to_string(segment) + " out of range");
    }
    return segments_[segment].lookup(value);
}

void SubcodeIndex::collect_candidates(std::span<const uint64_t> query, uint32_t r,
                                      std::vector<CodeId>& out) const {
    const size_t n = dataset_->size();
    const uint32_t t = r / layout_.segment_count();

    auto& seen = seen_bitmap(n);
    auto take = [&](std::span<const CodeId> ids) {
        for (CodeId id : ids) {
            uint64_t& word = seen[id / 64];
            const uint64_t bit = uint64_t{1} << (id % 64);
            if (!(word & bit)) {
                word |= bit;
                out.push_back(id);
            }
        }
    };

    bool everything = false;
    for (uint32_t i = 0; i < layout_.segment_count() && !everything; ++i) {
        const Segment& seg = segments_[i];
        if (t >= seg.width) {
            everything = true;
            break;
        }
        const uint64_t center = extract_bits(query, layout_.segment_begin(i), seg.width);
        if (ball_size(seg.width, t) > seg.values.size()) {
            // Fewer observed values than ball members: test the values instead.
            for (size_t k = 0; k < seg.values.size(); ++k) {
                if (static_cast<uint32_t>(std::popcount(seg.values[k] ^ center)) <= t) {
                    take(std::span<const CodeId>(seg.ids).subspan(seg.offsets[k],
                                                                  seg.offsets[k + 1] - seg.offsets[k]));
                }
            }
        } else {
            visit_ball_masks(seg.width, t, [&](uint64_t mask) { take(seg.lookup(center ^ mask)); });
        }
    }

    for (CodeId id : out) {
        seen[id / 64] = 0;
    }
    if (everything) {
        out.resize(n);
        std::iota(out.begin(), out.end(), CodeId{0});
    }
}

std::vector<CodeId> SubcodeIndex::candidates(const BinaryCode& query, uint32_t r) const {
    if (query.length() != layout_.total_bits()) {
        throw InvalidArgument("query has m=" + std::to_string(query.length()) + ", index has m=" +
                              std::to_string(layout_.total_bits()));
    }
    if (r > layout_.total_bits()) {
        throw InvalidArgument("radius " + std::to_string(r) + " exceeds m=" + std::to_string(layout_.total_bits()));
    }
    std::vector<CodeId> out;
    collect_candidates(query.words(), r, out);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<CodeId> SubcodeIndex::candidate_ids(std::span<const uint64_t> query, uint32_t r) const {
    if (query.size() != dataset_->stride()) {
        throw InvalidArgument("query word count does not match the index");
    }
    std::vector<CodeId> out;
    collect_candidates(query, r, out);
    return out;
}

FilteredResult SubcodeIndex::filtered_search(const BinaryCode& query, uint32_t r, Execution exec) const {
    if (query.length() != layout_.total_bits()) {
        throw InvalidArgument("query has m=" + std::to_string(query.length()) + ", index has m=" +
                              std::to_string(layout_.total_bits()));
    }
    return filtered_search(query.words(), r, exec);
}

FilteredResult SubcodeIndex::filtered_search(std::span<const uint64_t> query, uint32_t r, Execution exec) const {
    if (r > layout_.total_bits()) {
        throw InvalidArgument("radius " + std::to_string(r) + " exceeds m=" + std::to_string(layout_.total_bits()));
    }
    if (query.size() != dataset_->stride()) {
        throw InvalidArgument("query word count does not match the index");
    }
    std::vector<CodeId> cands;
    collect_candidates(query, r, cands);

    FilteredResult result;
    result.candidate_count = cands.size();
    if (exec == Execution::parallel) {
        kernels::omp::verify_candidates(dataset_->packed(), query, cands, r, result.neighbors);
    } else {
        kernels::serial::verify_candidates(dataset_->packed(), query, cands, r, result.neighbors);
    }
    std::sort(result.neighbors.begin(), result.neighbors.end(),
              [](const Neighbor& a, const Neighbor& b) { return a.id < b.id; });
    return result;
}

bool SubcodeIndex::same_postings(const SubcodeIndex& other) const {
    if (!(layout_ == other.layout_) || permutation_hash_ != other.permutation_hash_ ||
        !(sources_ == other.sources_) || segments_.size() != other.segments_.size()) {
        return false;
    }
    for (size_t i = 0; i < segments_.size(); ++i) {
        const auto& a = segments_[i];
        const auto& b = other.segments_[i];
        if (a.width != b.width || a.values != b.values || a.offsets != b.offsets || a.ids != b.ids) {
            return false;
        }
    }
    return true;
}

void SubcodeIndex::save(const std::filesystem::path& path) const {
    detail::ByteWriter out;
    out.bytes(kMagic);
    out.u16(kVersion);
    out.u32(layout_.total_bits());
    out.u64(dataset_->size());
    out.u32(layout_.segment_count());
    out.u32(layout_.width());
    out.u64(permutation_hash_);
    out.u64(dataset_->content_hash());
    out.string(sources_.dataset_path);
    out.string(sources_.permutation_path);
    for (const auto& seg : segments_) {
        out.varint(seg.values.size());
        for (size_t k = 0; k < seg.values.size(); ++k) {
            out.varint(seg.values[k]);
            const uint32_t lo = seg.offsets[k];
            const uint32_t hi = seg.offsets[k + 1];
            out.varint(hi - lo);
            CodeId prev = 0;
            for (uint32_t p = lo; p < hi; ++p) {
                out.varint(seg.ids[p] - prev);
                prev = seg.ids[p];
            }
        }
    }
    detail::write_file_synced(path, out.data());
}

namespace {

SubcodeIndex::Header parse_header(detail::ByteReader& in, const std::string& name) {
    if (in.remaining() < kMagic.size() || in.bytes(kMagic.size()) != kMagic) {
        throw FormatError(name + ": not an FIDX file (bad magic)");
    }
    const uint16_t version = in.u16();
    if (version != kVersion) {
        throw FormatError(name + ": unsupported FIDX version " + std::to_string(version));
    }
    SubcodeIndex::Header h{};
    h.m = in.u32();
    h.n = in.u64();
    h.segment_count = in.u32();
    h.width = in.u32();
    h.permutation_hash = in.u64();
    h.dataset_hash = in.u64();
    h.sources.dataset_path = in.string();
    h.sources.permutation_path = in.string();
    return h;
}

}  // namespace

SubcodeIndex::Header SubcodeIndex::read_header(const std::filesystem::path& path) {
    const auto bytes = detail::read_file(path);
    detail::ByteReader in(bytes, path.string());
    return parse_header(in, path.string());
}

SubcodeIndex SubcodeIndex::load(const std::filesystem::path& path, std::shared_ptr<const CodeDataset> ds) {
    if (!ds) {
        throw InvalidArgument("index load: null dataset");
    }
    const auto bytes = detail::read_file(path);
    detail::ByteReader in(bytes, path.string());
    const Header h = parse_header(in, path.string());
    const std::string& name = path.string();

    if (h.m != ds->code_length() || h.n != ds->size() || h.dataset_hash != ds->content_hash()) {
        throw FormatError(name + ": index was built over a different dataset");
    }
    SubCodeLayout layout = SubCodeLayout::from_width(h.m, h.width);
    if (layout.segment_count() != h.segment_count || layout.width() != h.width) {
        throw CorruptionError(name + ": inconsistent segment layout in header");
    }
    check_layout(*ds, layout);

    SubcodeIndex idx(ds, layout, h.permutation_hash);
    idx.sources_ = h.sources;
    idx.segments_.resize(layout.segment_count());
    for (uint32_t i = 0; i < layout.segment_count(); ++i) {
        Segment& seg = idx.segments_[i];
        seg.width = layout.segment_width(i);
        const uint64_t value_count = in.varint();
        if (value_count > h.n) {
            throw CorruptionError(name + ": segment " + std::to_string(i) + " claims too many values");
        }
        seg.offsets.assign(1, 0);
        seg.ids.reserve(h.n);
        std::vector<bool> covered(h.n, false);
        for (uint64_t k = 0; k < value_count; ++k) {
            const uint64_t value = in.varint();
            if ((seg.width < 64 && (value >> seg.width) != 0) || (k > 0 && value <= seg.values.back())) {
                throw CorruptionError(name + ": bad sub-code value in segment " + std::to_string(i));
            }
            const uint64_t count = in.varint();
            if (count == 0 || count > h.n - seg.ids.size()) {
                throw CorruptionError(name + ": bad posting count in segment " + std::to_string(i));
            }
            uint64_t id = 0;
            for (uint64_t p = 0; p < count; ++p) {
                const uint64_t delta = in.varint();
                if (p > 0 && delta == 0) {
                    throw CorruptionError(name + ": duplicate id in posting list");
                }
                id += delta;
                if (id >= h.n || covered[id]) {
                    throw CorruptionError(name + ": posting id out of range or listed twice");
                }
                covered[id] = true;
                seg.ids.push_back(static_cast<CodeId>(id));
            }
            seg.values.push_back(value);
            seg.offsets.push_back(static_cast<uint32_t>(seg.ids.size()));
        }
        if (seg.ids.size() != h.n) {
            throw CorruptionError(name + ": segment " + std::to_string(i) + " does not cover every code");
        }
        idx.finalize_segment(seg);
    }
    if (in.remaining() != 0) {
        throw CorruptionError(name + ": trailing bytes after postings");
    }
    return idx;
}

}  // namespace fenshses

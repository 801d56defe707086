/*
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace fenshses {

using CodeId = uint32_t;

constexpr size_t words_for_bits(size_t m) {
    return (m + 63) / 64;
}

/// An m-bit binary code packed into 64-bit words.
///
/// Bit i lives in bit (i % 64) of word (i / 64), counting from the least
/// significant end. Unused high bits of the last word are always zero.
class BinaryCode {
   public:
    /// All-zero code of length m.
    explicit BinaryCode(uint32_t m);

    /// Throws InvalidArgument if the word count is wrong or padding bits are set.
    BinaryCode(uint32_t m, std::vector<uint64_t> words);

    /// Convenience for short codes; value must fit in m bits.
    static BinaryCode from_u64(uint32_t m, uint64_t value);

    uint32_t length() const {
        return m_;
    }
    std::span<const uint64_t> words() const {
        return words_;
    }
    bool bit(size_t i) const {
        return (words_[i / 64] >> (i % 64)) & 1u;
    }

    friend bool operator==(const BinaryCode&, const BinaryCode&) = default;

   private:
    uint32_t m_;
    std::vector<uint64_t> words_;
};

/// Splits [0, m) into contiguous segments of a nominal width; the final
/// segment may be shorter when the width does not divide m.
class SubCodeLayout {
   public:
    /// Segments of `width` bits (1..64); segment count is ceil(m / width).
    static SubCodeLayout from_width(uint32_t m, uint32_t width);

    /// s segments of width ceil(m / s). Rejects combinations where the
    /// last segment would be empty (e.g. m=9, s=4).
    static SubCodeLayout from_segment_count(uint32_t m, uint32_t s);

    uint32_t total_bits() const {
        return m_;
    }
    uint32_t segment_count() const {
        return s_;
    }
    uint32_t width() const {
        return d_;
    }
    uint32_t segment_begin(uint32_t i) const {
        return i * d_;
    }
    uint32_t segment_width(uint32_t i) const {
        return i + 1 < s_ ? d_ : m_ - (s_ - 1) * d_;
    }
    uint32_t segment_of(uint32_t bit) const {
        return bit / d_;
    }

    friend bool operator==(const SubCodeLayout&, const SubCodeLayout&) = default;

   private:
    SubCodeLayout(uint32_t m, uint32_t s, uint32_t d) : m_(m), s_(s), d_(d) {}
    uint32_t m_;
    uint32_t s_;
    uint32_t d_;
};

/// Hardware (or compiler-provided) population count. Production path.
inline int popcount64(uint64_t u) {
    return std::popcount(u);
}

/// HAKMEM item 169 bit count, widened to 64 bits.
///
/// Counts bits within 3-bit groups by masked subtraction, pairs the groups
/// into 6-bit fields, then folds the fields. The classic `% 63` fold is wrong
/// at 64 bits (all-ones gives 64 % 63 == 1), so the fields are summed with
/// shifts instead. Kept as a reference implementation next to popcount64().
constexpr int hakmem_popcount64(uint64_t u) {
    uint64_t count = u - ((u >> 1) & 0xB6DB6DB6DB6DB6DBull) - ((u >> 2) & 0x9249249249249249ull);
    uint64_t fields = (count + (count >> 3)) & 0x71C71C71C71C71C7ull;
    // 11 six-bit fields, each <= 6; partial sums stay below 64 so no field carries.
    fields += fields >> 6;
    fields += fields >> 12;
    fields += fields >> 24;
    return static_cast<int>((fields & 0x3F) + ((fields >> 48) & 0x3F));
}

/// Hamming distance between two packed codes of the same word count.
inline uint32_t hamming_words(std::span<const uint64_t> a, std::span<const uint64_t> b) {
    uint32_t d = 0;
    for (size_t w = 0; w < a.size(); ++w) {
        d += static_cast<uint32_t>(popcount64(a[w] ^ b[w]));
    }
    return d;
}

/// Throws InvalidArgument on length mismatch.
uint32_t hamming_distance(const BinaryCode& a, const BinaryCode& b);

/// Reads `len` (<= 64) bits starting at bit `begin` as an integer whose bit 0
/// is code bit `begin`.
inline uint64_t extract_bits(std::span<const uint64_t> words, uint32_t begin, uint32_t len) {
    const uint32_t w = begin / 64;
    const uint32_t off = begin % 64;
    uint64_t v = words[w] >> off;
    if (off != 0 && off + len > 64) {
        v |= words[w + 1] << (64 - off);
    }
    return len == 64 ? v : v & ((uint64_t{1} << len) - 1);
}

/// Sub-code values of `code` under `layout`, in segment order.
std::vector<uint64_t> segment(const BinaryCode& code, const SubCodeLayout& layout);

}  // namespace fenshses

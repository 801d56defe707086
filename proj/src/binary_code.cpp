/*
 * SPDX-License-Identifier: Apache-2.0
 */

#include "fenshses/binary_code.hpp"

#include <string>

#include "fenshses/error.hpp"

namespace fenshses {

namespace {

uint64_t padding_mask(uint32_t m) {
    const uint32_t used = m % 64;
    return used == 0 ? 0 : ~((uint64_t{1} << used) - 1);
}

}  // namespace

BinaryCode::BinaryCode(uint32_t m) : m_(m), words_(words_for_bits(m), 0) {
    if (m == 0) {
        throw InvalidArgument("code length must be positive");
    }
}

BinaryCode::BinaryCode(uint32_t m, std::vector<uint64_t> words) : m_(m), words_(std::move(words)) {
    if (m == 0) {
        throw InvalidArgument("code length must be positive");
    }
    if (words_.size() != words_for_bits(m)) {
        throw InvalidArgument(
                "expected " + std::to_string(words_for_bits(m)) + " words for m=" + std::to_string(m) +
                ", got " + std::to_string(words_.size()));
    }
    if (words_.back() & padding_mask(m)) {
        throw InvalidArgument("bits beyond m=" + std::to_string(m) + " are set");
    }
}

BinaryCode BinaryCode::from_u64(uint32_t m, uint64_t value) {
    if (m == 0 || m > 64) {
        throw InvalidArgument("from_u64 needs 1 <= m <= 64");
    }
    return BinaryCode(m, std::vector<uint64_t>{value});
}

SubCodeLayout SubCodeLayout::from_width(uint32_t m, uint32_t width) {
    if (m == 0) {
        throw InvalidArgument("layout needs m > 0");
    }
    if (width == 0 || width > 64) {
        throw InvalidArgument("segment width must be in [1, 64], got " + std::to_string(width));
    }
    if (width > m) {
        width = m;
    }
    return SubCodeLayout(m, (m + width - 1) / width, width);
}

SubCodeLayout SubCodeLayout::from_segment_count(uint32_t m, uint32_t s) {
    if (m == 0 || s == 0 || s > m) {
        throw InvalidArgument("segment count must be in [1, m]");
    }
    const uint32_t d = (m + s - 1) / s;
    if ((s - 1) * d >= m) {
        throw InvalidArgument(
                "m=" + std::to_string(m) + " cannot be split into " + std::to_string(s) +
                " non-empty segments of width " + std::to_string(d));
    }
    if (d > 64) {
        throw InvalidArgument("segment width " + std::to_string(d) + " exceeds 64");
    }
    return SubCodeLayout(m, s, d);
}

uint32_t hamming_distance(const BinaryCode& a, const BinaryCode& b) {
    if (a.length() != b.length()) {
        throw InvalidArgument(
                "hamming_distance: length mismatch " + std::to_string(a.length()) + " vs " +
                std::to_string(b.length()));
    }
    return hamming_words(a.words(), b.words());
}

std::vector<uint64_t> segment(const BinaryCode& code, const SubCodeLayout& layout) {
    if (layout.total_bits() != code.length()) {
        throw InvalidArgument("segment: layout is for m=" + std::to_string(layout.total_bits()) +
                              " but code has m=" + std::to_string(code.length()));
    }
    std::vector<uint64_t> out(layout.segment_count());
    for (uint32_t i = 0; i < layout.segment_count(); ++i) {
        out[i] = extract_bits(code.words(), layout.segment_begin(i), layout.segment_width(i));
    }
    return out;
}

}  // namespace fenshses

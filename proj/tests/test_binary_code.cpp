/*
 * SPDX-License-Identifier: Apache-2.0
 */

#include <gtest/gtest.h>

#include <random>

#include "fenshses/binary_code.hpp"
#include "fenshses/error.hpp"
#include "oracles.hpp"

using namespace fenshses;

TEST(BinaryCode, RejectsBadConstruction) {
    EXPECT_THROW(BinaryCode(0), InvalidArgument);
    EXPECT_THROW(BinaryCode(128, std::vector<uint64_t>{1}), InvalidArgument);
    // Bit 4 is padding for m=4.
    EXPECT_THROW(BinaryCode(4, std::vector<uint64_t>{0x10}), InvalidArgument);
    EXPECT_NO_THROW(BinaryCode(64, std::vector<uint64_t>{~uint64_t{0}}));
}

TEST(BinaryCode, BitOrderIsLeastSignificantFirst) {
    const auto c = BinaryCode::from_u64(8, 0b0000'0101);
    EXPECT_TRUE(c.bit(0));
    EXPECT_FALSE(c.bit(1));
    EXPECT_TRUE(c.bit(2));
}

TEST(HammingDistance, HandExamples) {
    const auto a = BinaryCode::from_u64(4, 0b1010);
    const auto b = BinaryCode::from_u64(4, 0b0110);
    EXPECT_EQ(hamming_distance(a, b), 2u);
    EXPECT_EQ(hamming_distance(a, a), 0u);
}

TEST(HammingDistance, LengthMismatchThrows) {
    EXPECT_THROW(hamming_distance(BinaryCode(8), BinaryCode(9)), InvalidArgument);
}

TEST(HammingDistance, MatchesPerBitOracleOnRandomPairs) {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 10000; ++i) {
        const auto a = oracle::random_code(128, rng);
        const auto b = oracle::random_code(128, rng);
        ASSERT_EQ(hamming_distance(a, b), oracle::naive_hamming(a, b));
    }
}

TEST(HammingDistance, EqualsSumOfWordPopcounts) {
    std::mt19937_64 rng(12);
    for (int i = 0; i < 1000; ++i) {
        const auto a = oracle::random_code(200, rng);
        const auto b = oracle::random_code(200, rng);
        uint32_t sum = 0;
        for (size_t w = 0; w < a.words().size(); ++w) {
            sum += static_cast<uint32_t>(oracle::naive_popcount(a.words()[w] ^ b.words()[w]));
        }
        ASSERT_EQ(hamming_distance(a, b), sum);
    }
}

TEST(HammingDistance, MetricAxiomsOnRandomTriples) {
    std::mt19937_64 rng(13);
    for (uint32_t m : {7u, 64u, 100u, 256u}) {
        for (int i = 0; i < 500; ++i) {
            const auto a = oracle::random_code(m, rng);
            const auto b = i % 5 == 0 ? a : oracle::random_code(m, rng);
            const auto c = oracle::random_code(m, rng);
            const auto ab = hamming_distance(a, b);
            EXPECT_EQ(ab, hamming_distance(b, a));
            EXPECT_EQ(ab == 0, a == b);
            EXPECT_LE(hamming_distance(a, c), ab + hamming_distance(b, c));
        }
    }
}

TEST(HakmemPopcount, EdgeValues) {
    EXPECT_EQ(hakmem_popcount64(0), 0);
    EXPECT_EQ(hakmem_popcount64(~uint64_t{0}), 64);
    EXPECT_EQ(hakmem_popcount64(uint64_t{1} << 63), 1);
    EXPECT_EQ(hakmem_popcount64(0x7FFFFFFFFFFFFFFFull), 63);
    static_assert(hakmem_popcount64(0xF0F0) == 8);
}

TEST(HakmemPopcount, ExhaustiveSixteenBitEmbeddings) {
    // Every 16-bit pattern, placed at each 16-bit lane of the word.
    for (uint32_t v = 0; v < (1u << 16); ++v) {
        for (int shift : {0, 16, 32, 48}) {
            const uint64_t u = uint64_t{v} << shift;
            ASSERT_EQ(hakmem_popcount64(u), oracle::naive_popcount(u)) << std::hex << u;
        }
    }
}

TEST(HakmemPopcount, MatchesNaiveOnRandomWords) {
    std::mt19937_64 rng(14);
    for (int i = 0; i < 1000000; ++i) {
        const uint64_t u = rng();
        ASSERT_EQ(hakmem_popcount64(u), oracle::naive_popcount(u)) << std::hex << u;
        ASSERT_EQ(popcount64(u), oracle::naive_popcount(u));
    }
}

TEST(HakmemPopcount, PrintedScriptWithoutFoldIsNotAPopcount) {
    // The three-constant expression alone leaves per-field counts in place.
    auto unfolded = [](uint64_t u) {
        uint64_t c = u - ((u >> 1) & 0xB6DB6DB6DB6DB6DBull) - ((u >> 2) & 0x9249249249249249ull);
        return (c + (c >> 3)) & 0x71C71C71C71C71C7ull;
    };
    EXPECT_EQ(unfolded(0b111), 3u);                  // one field: happens to agree
    EXPECT_NE(unfolded(~uint64_t{0}), uint64_t{64});  // many fields: it does not
}

TEST(SubCodeLayout, FromWidthAndCount) {
    const auto a = SubCodeLayout::from_width(128, 16);
    EXPECT_EQ(a.segment_count(), 8u);
    EXPECT_EQ(a.segment_width(7), 16u);

    const auto b = SubCodeLayout::from_width(100, 16);
    EXPECT_EQ(b.segment_count(), 7u);
    EXPECT_EQ(b.segment_width(6), 4u);

    const auto c = SubCodeLayout::from_segment_count(100, 8);
    EXPECT_EQ(c.width(), 13u);
    EXPECT_EQ(c.segment_width(7), 9u);

    EXPECT_THROW(SubCodeLayout::from_segment_count(9, 4), InvalidArgument);
    EXPECT_THROW(SubCodeLayout::from_width(128, 0), InvalidArgument);
    EXPECT_THROW(SubCodeLayout::from_width(128, 65), InvalidArgument);
}

TEST(SubCodeLayout, SegmentsPartitionAllBits) {
    for (uint32_t m : {1u, 8u, 63u, 64u, 65u, 100u, 128u, 257u}) {
        for (uint32_t w : {1u, 3u, 16u, 64u}) {
            const auto layout = SubCodeLayout::from_width(m, w);
            uint32_t next = 0;
            for (uint32_t i = 0; i < layout.segment_count(); ++i) {
                ASSERT_EQ(layout.segment_begin(i), next);
                ASSERT_GT(layout.segment_width(i), 0u);
                ASSERT_LE(layout.segment_width(i), 64u);
                next += layout.segment_width(i);
            }
            ASSERT_EQ(next, m);
        }
    }
}

TEST(Segment, WordAlignedSplitIsVerbatim) {
    const BinaryCode c(128, {0x0123456789ABCDEFull, 0xFEDCBA9876543210ull});
    const auto subs = segment(c, SubCodeLayout::from_segment_count(128, 2));
    ASSERT_EQ(subs.size(), 2u);
    EXPECT_EQ(subs[0], 0x0123456789ABCDEFull);
    EXPECT_EQ(subs[1], 0xFEDCBA9876543210ull);
}

TEST(Segment, HandExample) {
    const auto subs = segment(BinaryCode::from_u64(8, 0b1111'0000), SubCodeLayout::from_segment_count(8, 2));
    EXPECT_EQ(subs, (std::vector<uint64_t>{0b0000, 0b1111}));
}

TEST(Segment, LengthMismatchThrows) {
    EXPECT_THROW(segment(BinaryCode(16), SubCodeLayout::from_width(8, 4)), InvalidArgument);
}

TEST(Segment, ReconstructsBitsAndDecomposesDistance) {
    std::mt19937_64 rng(15);
    for (uint32_t m : {16u, 100u, 128u, 200u}) {
        for (uint32_t w : {5u, 16u, 30u, 64u}) {
            const auto layout = SubCodeLayout::from_width(m, w);
            for (int i = 0; i < 50; ++i) {
                const auto a = oracle::random_code(m, rng);
                const auto b = oracle::random_code(m, rng);
                const auto sa = segment(a, layout);
                const auto sb = segment(b, layout);
                uint32_t sum = 0;
                for (uint32_t s = 0; s < layout.segment_count(); ++s) {
                    ASSERT_EQ(sa[s], oracle::naive_subcode(a, layout.segment_begin(s), layout.segment_width(s)));
                    sum += static_cast<uint32_t>(oracle::naive_popcount(sa[s] ^ sb[s]));
                }
                ASSERT_EQ(sum, hamming_distance(a, b));
            }
        }
    }
}

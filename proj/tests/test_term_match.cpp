/*
 * SPDX-License-Identifier: Apache-2.0
 */

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "fenshses/error.hpp"
#include "fenshses/term_match.hpp"
#include "oracles.hpp"

using namespace fenshses;

namespace {

std::vector<CodeId> ids(std::span<const CodeId> s) {
    return {s.begin(), s.end()};
}

std::vector<Neighbor> by_id(std::vector<Neighbor> v) {
    std::sort(v.begin(), v.end(), [](const Neighbor& a, const Neighbor& b) { return a.id < b.id; });
    return v;
}

}  // namespace

TEST(PositionPostings, HandBuilt) {
    const CodeDataset ds(std::vector<BinaryCode>{BinaryCode::from_u64(2, 0b01), BinaryCode::from_u64(2, 0b10)});
    const auto pp = PositionPostings::build(ds);
    EXPECT_EQ(ids(pp.ones(0)), std::vector<CodeId>{0});
    EXPECT_EQ(ids(pp.ones(1)), std::vector<CodeId>{1});
    EXPECT_EQ(ids(pp.zeros(0)), std::vector<CodeId>{1});
    EXPECT_EQ(ids(pp.zeros(1)), std::vector<CodeId>{0});
}

TEST(PositionPostings, AllZeros) {
    const CodeDataset ds(std::vector<BinaryCode>(5, BinaryCode(10)));
    const auto pp = PositionPostings::build(ds);
    for (uint32_t p = 0; p < 10; ++p) {
        EXPECT_TRUE(pp.ones(p).empty());
        EXPECT_EQ(pp.zeros(p).size(), 5u);
    }
}

TEST(PositionPostings, PartitionMatchesRescan) {
    const auto ds = oracle::random_dataset(500, 100, 21);
    const auto pp = PositionPostings::build(ds);
    for (uint32_t p = 0; p < 100; ++p) {
        std::vector<CodeId> ones, zeros;
        for (CodeId i = 0; i < ds.size(); ++i) (ds.code(i).bit(p) ? ones : zeros).push_back(i);
        ASSERT_EQ(ids(pp.ones(p)), ones);
        ASSERT_EQ(ids(pp.zeros(p)), zeros);
    }
}

TEST(TermMatch, ExactQueryAndComplement) {
    std::mt19937_64 rng(22);
    auto codes = std::vector<BinaryCode>{};
    for (int i = 0; i < 50; ++i) codes.push_back(oracle::random_code(64, rng));
    codes.push_back(codes[7]);  // exact duplicate at id 50
    const CodeDataset ds(codes);
    const auto pp = PositionPostings::build(ds);

    const auto r0 = term_match_search(pp, codes[7], 0);
    EXPECT_EQ(r0.neighbors, (std::vector<Neighbor>{{7, 0}, {50, 0}}));
    EXPECT_EQ(r0.lists_visited, 64u);

    const BinaryCode complement(64, {~codes[3].words()[0]});
    const auto rm = term_match_search(pp, complement, 64);
    EXPECT_EQ(rm.neighbors.size(), ds.size());
    EXPECT_NE(std::find(rm.neighbors.begin(), rm.neighbors.end(), Neighbor{3, 64}), rm.neighbors.end());
}

TEST(TermMatch, Errors) {
    const auto ds = oracle::random_dataset(10, 16, 1);
    const auto pp = PositionPostings::build(ds);
    EXPECT_THROW(term_match_search(pp, BinaryCode(16), 17), InvalidArgument);
    EXPECT_THROW(term_match_search(pp, BinaryCode(15), 1), InvalidArgument);
}

TEST(TermMatch, MatchesLinearScanOracle) {
    const auto ds = oracle::random_dataset(3000, 64, 23);
    const auto pp = PositionPostings::build(ds);
    std::mt19937_64 rng(24);
    for (int i = 0; i < 100; ++i) {
        // Half the queries are perturbed dataset codes so the sets are non-empty.
        const auto base = ds.code(rng() % ds.size());
        const auto q = i % 2 ? oracle::flip_bits(base, static_cast<uint32_t>(rng() % 8), rng) : oracle::random_code(64, rng);
        for (uint32_t r : {5u, 10u}) {
            const auto got = term_match_search(pp, q, r, i % 3 == 0 ? Execution::parallel : Execution::serial);
            ASSERT_EQ(got.neighbors, by_id(oracle::linear_scan(ds, q, r)));
        }
    }
}

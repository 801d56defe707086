/*
 * SPDX-License-Identifier: Apache-2.0
 */

#include <gtest/gtest.h>

#include <random>

#include "fenshses/error.hpp"
#include "fenshses/search_engine.hpp"
#include "oracles.hpp"

using namespace fenshses;

namespace {

struct Fixture {
    std::shared_ptr<const CodeDataset> ds;
    SearchEngine engine;
};

Fixture make(size_t n, uint32_t m, uint64_t seed, EngineOptions opts = {}) {
    auto ds = std::make_shared<const CodeDataset>(oracle::random_dataset(n, m, seed));
    auto engine = SearchEngine::build(ds, opts);
    return {ds, std::move(engine)};
}

}  // namespace

TEST(Strategy, NamesRoundTrip) {
    for (auto s : kAllStrategies) EXPECT_EQ(parse_strategy(to_string(s)), s);
    EXPECT_EQ(parse_strategy("permuted"), SearchStrategy::FilteredPermuted);
    EXPECT_EQ(parse_strategy("SCAN"), SearchStrategy::BitOpScan);
    EXPECT_EQ(parse_strategy("term"), SearchStrategy::TermMatch);
    EXPECT_THROW(parse_strategy("nope"), InvalidArgument);
}

TEST(SearchEngineTest, AllStrategiesAgreeWithOracle) {
    auto f = make(8000, 128, 71);
    std::mt19937_64 rng(72);
    for (int i = 0; i < 30; ++i) {
        const auto q = i % 2 ? oracle::flip_bits(f.ds->code(rng() % f.ds->size()), static_cast<uint32_t>(rng() % 16), rng)
                             : oracle::random_code(128, rng);
        for (uint32_t r : {0u, 5u, 10u, 15u, 20u}) {
            const auto expect = oracle::linear_scan(*f.ds, q, r);
            for (auto s : kAllStrategies) {
                const auto got = f.engine.r_neighbor_search(s, q, r);
                ASSERT_EQ(got.neighbors, expect) << to_string(s) << " r=" << r;
                ASSERT_GE(got.candidate_count, got.neighbors.size());
                ASSERT_LE(got.candidate_count, f.ds->size());
            }
        }
    }
}

TEST(SearchEngineTest, FullRadiusReturnsEverything) {
    auto f = make(500, 64, 73);
    std::mt19937_64 rng(74);
    const auto q = oracle::random_code(64, rng);
    for (auto s : kAllStrategies) {
        const auto got = f.engine.r_neighbor_search(s, q, 64);
        ASSERT_EQ(got.neighbors, oracle::linear_scan(*f.ds, q, 64)) << to_string(s);
        EXPECT_EQ(got.neighbors.size(), 500u);
    }
    EXPECT_THROW(f.engine.r_neighbor_search(SearchStrategy::Filtered, q, 65), InvalidArgument);
    EXPECT_THROW(f.engine.r_neighbor_search(SearchStrategy::Filtered, BinaryCode(32), 1), InvalidArgument);
}

TEST(SearchEngineTest, ParallelExecutionMatchesSerial) {
    EngineOptions opts;
    opts.exec = Execution::parallel;
    auto par = make(30000, 128, 75, opts);
    auto ser = make(30000, 128, 75);
    std::mt19937_64 rng(76);
    for (int i = 0; i < 10; ++i) {
        const auto q = oracle::flip_bits(par.ds->code(rng() % par.ds->size()), 8, rng);
        for (auto s : kAllStrategies) {
            ASSERT_EQ(par.engine.r_neighbor_search(s, q, 12).neighbors, ser.engine.r_neighbor_search(s, q, 12).neighbors);
        }
    }
}

TEST(SearchEngineTest, KnnMatchesSortOracle) {
    auto f = make(5000, 64, 77);
    std::mt19937_64 rng(78);
    for (int i = 0; i < 20; ++i) {
        const auto q = oracle::random_code(64, rng);
        for (size_t k : {1ul, 10ul, 100ul}) {
            const auto expect = oracle::knn_by_sort(*f.ds, q, k);
            for (auto s : kAllStrategies) {
                ASSERT_EQ(f.engine.knn_search(s, q, k).neighbors, expect) << to_string(s) << " k=" << k;
            }
        }
        // Prefix consistency: the 10 nearest are the first 10 of the 100 nearest.
        const auto k100 = f.engine.knn_search(SearchStrategy::FilteredPermuted, q, 100).neighbors;
        const auto k10 = f.engine.knn_search(SearchStrategy::FilteredPermuted, q, 10).neighbors;
        ASSERT_TRUE(std::equal(k10.begin(), k10.end(), k100.begin()));
    }
}

TEST(SearchEngineTest, KnnLargerThanDataset) {
    auto f = make(50, 32, 79);
    std::mt19937_64 rng(80);
    const auto q = oracle::random_code(32, rng);
    for (auto s : kAllStrategies) {
        const auto got = f.engine.knn_search(s, q, 80);
        EXPECT_EQ(got.neighbors, oracle::knn_by_sort(*f.ds, q, 50));
    }
    EXPECT_THROW(f.engine.knn_search(SearchStrategy::BitOpScan, q, 0), InvalidArgument);
}

TEST(SearchEngineTest, MissingStructuresAreNotReady) {
    EngineOptions opts;
    opts.build_term_match = false;
    opts.build_permuted = false;
    auto f = make(100, 32, 81, opts);
    EXPECT_FALSE(f.engine.supports(SearchStrategy::TermMatch));
    EXPECT_FALSE(f.engine.supports(SearchStrategy::FilteredPermuted));
    EXPECT_TRUE(f.engine.supports(SearchStrategy::BitOpScan));
    EXPECT_EQ(f.engine.default_strategy(), SearchStrategy::Filtered);
    std::mt19937_64 rng(82);
    const auto q = oracle::random_code(32, rng);
    EXPECT_THROW(f.engine.r_neighbor_search(SearchStrategy::TermMatch, q, 3), NotReadyError);
    EXPECT_THROW(f.engine.knn_search(SearchStrategy::FilteredPermuted, q, 3), NotReadyError);
    EXPECT_NO_THROW(f.engine.r_neighbor_search(SearchStrategy::Filtered, q, 3));
}

TEST(SearchEngineTest, SuppliedPermutationIsUsed) {
    EngineOptions opts;
    std::vector<uint32_t> map(64);
    for (uint32_t i = 0; i < 64; ++i) map[i] = 63 - i;
    opts.permutation = Permutation(map);
    auto f = make(2000, 64, 83, opts);
    ASSERT_TRUE(f.engine.permuted());
    EXPECT_EQ(f.engine.permuted_index()->permutation, Permutation(map));
    std::mt19937_64 rng(84);
    const auto q = oracle::flip_bits(f.ds->code(3), 4, rng);
    EXPECT_EQ(f.engine.r_neighbor_search(SearchStrategy::FilteredPermuted, q, 8).neighbors,
              oracle::linear_scan(*f.ds, q, 8));
}

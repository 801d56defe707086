/*
 * SPDX-License-Identifier: Apache-2.0
 */

#include <gtest/gtest.h>

#include <random>

#include "fenshses/kernels.hpp"
#include "oracles.hpp"

using namespace fenshses;

// The OpenMP kernels must reproduce the serial reference exactly, including
// output order. Sizes straddle the parallel threshold.

TEST(Kernels, ScanRadiusParallelMatchesSerial) {
    for (size_t n : {1ul, 1000ul, 40000ul}) {
        const auto ds = oracle::random_dataset(n, 128, n);
        std::mt19937_64 rng(n);
        for (uint32_t r : {0u, 50u, 60u, 128u}) {
            const auto q = oracle::random_code(128, rng);
            std::vector<Neighbor> a, b;
            kernels::serial::scan_radius(ds.packed(), q.words(), r, a);
            kernels::omp::scan_radius(ds.packed(), q.words(), r, b);
            ASSERT_EQ(a, b);
            for (const auto& nb : a) {
                ASSERT_EQ(nb.distance, oracle::naive_hamming(ds.code(nb.id), q));
                ASSERT_LE(nb.distance, r);
            }
        }
    }
}

TEST(Kernels, VerifyCandidatesParallelMatchesSerial) {
    const auto ds = oracle::random_dataset(50000, 64, 5);
    std::mt19937_64 rng(6);
    std::vector<CodeId> cands;
    for (CodeId i = 0; i < 50000; i += 2) cands.push_back(i);
    const auto q = oracle::random_code(64, rng);
    std::vector<Neighbor> a, b;
    kernels::serial::verify_candidates(ds.packed(), q.words(), cands, 28, a);
    kernels::omp::verify_candidates(ds.packed(), q.words(), cands, 28, b);
    EXPECT_EQ(a, b);
    EXPECT_FALSE(a.empty());
}

TEST(Kernels, AccumulatePostingsParallelMatchesSerial) {
    std::mt19937_64 rng(7);
    const size_t n = 70000;
    std::vector<std::vector<CodeId>> lists(20);
    for (auto& l : lists) {
        for (CodeId id = 0; id < n; ++id) {
            if (rng() % 3 == 0) l.push_back(id);
        }
    }
    std::vector<std::span<const CodeId>> spans(lists.begin(), lists.end());
    std::vector<uint16_t> a(n, 0), b(n, 0);
    kernels::serial::accumulate_postings(spans, a);
    kernels::omp::accumulate_postings(spans, b);
    EXPECT_EQ(a, b);
}

TEST(Kernels, ColumnCooccurrenceParallelMatchesSerial) {
    std::mt19937_64 rng(8);
    const size_t stride = 37, cols = 19;
    std::vector<uint64_t> columns(stride * cols);
    for (auto& w : columns) w = rng();
    std::vector<uint64_t> a(cols * cols), b(cols * cols);
    kernels::serial::column_cooccurrence(columns, stride, cols, a);
    kernels::omp::column_cooccurrence(columns, stride, cols, b);
    EXPECT_EQ(a, b);
    uint64_t diag = 0;
    for (size_t w = 0; w < stride; ++w) diag += static_cast<uint64_t>(oracle::naive_popcount(columns[w]));
    EXPECT_EQ(a[0], diag);
}

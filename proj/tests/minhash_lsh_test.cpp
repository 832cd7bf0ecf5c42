#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "cpsjoin/allpairs.hpp"
#include "cpsjoin/minhash_lsh.hpp"
#include "test_util.hpp"

using namespace cpsjoin;
using cpsjoin::testing::clustered_collection;
using cpsjoin::testing::oracle_jaccard;
using cpsjoin::testing::pair_with_overlap;
using cpsjoin::testing::random_set;

TEST(Repetitions, Formula) {
    // ⌈ln 10 / 0.5³⌉ = ⌈18.42⌉
    EXPECT_EQ(repetitions_for_recall(0.5, 3, 0.9), 19u);
    EXPECT_EQ(repetitions_for_recall(0.5, 3, 1e-9), 1u);
    for (std::size_t k : {1u, 4u, 9u}) EXPECT_EQ(repetitions_for_recall(1.0, k, 0.9), 3u);
    EXPECT_THROW((void)repetitions_for_recall(0.5, 0, 0.9), Error);
    EXPECT_THROW((void)repetitions_for_recall(0.5, 2, 1.0), Error);
}

TEST(SamplePositions, DistinctAndInRange) {
    Rng rng(1);
    for (int trial = 0; trial < 200; ++trial) {
        auto pos = sample_positions(128, 10, rng);
        ASSERT_EQ(pos.size(), 10u);
        std::sort(pos.begin(), pos.end());
        EXPECT_EQ(std::adjacent_find(pos.begin(), pos.end()), pos.end());
        EXPECT_LT(pos.back(), 128u);
    }
}

TEST(ChooseK, DisjointRecordsPickSmallestK) {
    std::vector<TokenSet> raw;
    for (std::uint32_t i = 0; i < 500; ++i) raw.push_back({3 * i, 3 * i + 1, 3 * i + 2});
    const Dataset ds = canonicalize(raw);
    const EmbeddedDataset emb(ds, 128, 1, 2);
    std::array<double, kMaxK + 1> costs{};
    EXPECT_EQ(choose_k(emb, 0.5, 0.9, 3, &costs), 2u);
    // No collisions: cost is n · L(k), increasing in k.
    for (std::size_t k = kMinK; k <= kMaxK; ++k)
        EXPECT_DOUBLE_EQ(costs[k], 500.0 * static_cast<double>(repetitions_for_recall(0.5, k, 0.9)));
}

TEST(ChooseK, StaysInRangeAndIsDeterministic) {
    std::mt19937_64 rng(4);
    // One dense cluster: every k collides heavily.
    const Dataset dense = canonicalize(clustered_collection(rng, 1, 300, 30, 0.97, 40));
    const Dataset mixed = canonicalize(clustered_collection(rng, 30, 10, 30, 0.8, 3000));
    for (const Dataset* ds : {&dense, &mixed}) {
        const EmbeddedDataset emb(*ds, 128, 1, 5);
        for (double lambda : {0.5, 0.7, 0.9}) {
            const std::size_t k = choose_k(emb, lambda, 0.9, 6);
            EXPECT_GE(k, kMinK);
            EXPECT_LE(k, kMaxK);
            EXPECT_EQ(k, choose_k(emb, lambda, 0.9, 6));
        }
    }
}

TEST(MinHashLsh, CollisionLawPerRepetition) {
    const auto [x, y] = pair_with_overlap(0, 50, 25);  // J = 0.5
    std::vector<TokenSet> raw{x, y};
    const Dataset ds = canonicalize(raw);
    const EmbeddedDataset emb(ds, 128, 1, 7);
    const auto a = emb.signature(0), b = emb.signature(1);
    std::size_t agree = 0;
    for (std::size_t i = 0; i < 128; ++i) agree += a[i] == b[i];
    const double s = agree / 128.0;

    for (std::size_t k : {1u, 2u, 3u}) {
        Rng rng(derive_seed(8, k));
        int together = 0;
        constexpr int kReps = 20000;
        for (int rep = 0; rep < kReps; ++rep) {
            const auto pos = sample_positions(128, k, rng);
            bucket_by_positions(emb, pos, [&](std::span<const RecordId> bucket) { together += bucket.size() == 2; });
        }
        // Without replacement the exact law is hypergeometric; s^k is its
        // with-replacement counterpart. Both agree within the tolerance.
        double hyper = 1.0;
        for (std::size_t j = 0; j < k; ++j) hyper *= static_cast<double>(agree - j) / static_cast<double>(128 - j);
        const double freq = static_cast<double>(together) / kReps;
        EXPECT_NEAR(freq, std::pow(s, static_cast<double>(k)), 0.02) << "k=" << k;
        EXPECT_NEAR(freq, hyper, 0.02) << "k=" << k;
    }
}

TEST(MinHashLsh, PlantedPairFoundWithTargetFrequency) {
    std::mt19937_64 rng(9);
    std::vector<TokenSet> raw;
    for (int i = 0; i < 500; ++i) raw.push_back(random_set(rng, 30, 0, 5000));
    const auto [x, y] = pair_with_overlap(100000, 48, 16);  // J = 0.6
    raw.push_back(x);
    raw.push_back(y);
    std::vector<std::int64_t> index;
    const Dataset ds = canonicalize(raw, &index);
    const RecordPair planted(static_cast<RecordId>(index[500]), static_cast<RecordId>(index[501]));
    int found = 0;
    constexpr int kRuns = 100;
    for (int run = 0; run < kRuns; ++run) {
        LshConfig cfg;
        cfg.lambda = 0.5;
        cfg.recall = 0.9;
        cfg.seed = 500 + run;
        const auto out = lsh_join(ds, cfg);
        EXPECT_EQ(out.L, repetitions_for_recall(0.5, out.k, 0.9));
        found += std::binary_search(out.pairs.begin(), out.pairs.end(), planted);
    }
    EXPECT_GE(found, 90);
}

TEST(MinHashLsh, DissimilarDataGivesNothing) {
    std::mt19937_64 rng(10);
    const Dataset ds = canonicalize(cpsjoin::testing::random_collection(rng, 1000, 5, 40, 20000));
    ASSERT_TRUE(brute_force_join(ds, 0.5).empty());
    LshConfig cfg;
    EXPECT_TRUE(lsh_join(ds, cfg).pairs.empty());
}

TEST(MinHashLsh, IdenticalSignaturesWithOneTable) {
    const TokenSet x{1, 2, 3, 4, 5, 6, 7, 8};
    Dataset ds;
    ds.records = {x, x};
    ds.universe = 9;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        LshConfig cfg;
        cfg.k = 1;
        cfg.L = 1;
        cfg.seed = seed;
        const auto out = lsh_join(ds, cfg);
        ASSERT_EQ(out.pairs.size(), 1u);
        EXPECT_EQ(out.pairs[0], RecordPair(0, 1));
    }
}

TEST(MinHashLsh, PrecisionCountersAndDeterminism) {
    std::mt19937_64 rng(11);
    const Dataset ds = canonicalize(clustered_collection(rng, 40, 20, 30, 0.8, 3000));
    LshConfig cfg;
    cfg.lambda = 0.6;
    cfg.seed = 12;
    const auto a = lsh_join(ds, cfg);
    const auto b = lsh_join(ds, cfg);
    for (const auto& p : a.pairs) EXPECT_GE(oracle_jaccard(ds.records[p.first], ds.records[p.second]), 0.6 - 1e-12);
    EXPECT_GE(a.stats.pre_candidates, a.stats.candidates);
    EXPECT_GE(a.stats.candidates, a.stats.results);
    EXPECT_EQ(a.pairs, b.pairs);
    EXPECT_EQ(a.stats.pre_candidates, b.stats.pre_candidates);
    EXPECT_EQ(a.stats.candidates, b.stats.candidates);
    EXPECT_EQ(a.k, b.k);
    EXPECT_GE(recall(a.pairs, allpairs_join(ds, 0.6)), 0.85);
}

TEST(MinHashLsh, RejectsBadConfig) {
    LshConfig cfg;
    cfg.k = 200;
    EXPECT_THROW(cfg.validate(), Error);
    cfg = {};
    cfg.recall = 1.0;
    EXPECT_THROW(cfg.validate(), Error);
}

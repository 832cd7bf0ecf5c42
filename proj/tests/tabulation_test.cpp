#include <array>
#include <random>

#include <gtest/gtest.h>

#include "cpsjoin/tabulation.hpp"

using cpsjoin::BitHash;
using cpsjoin::Tabulation64;

TEST(Tabulation, SameSeedSameTables) {
    const Tabulation64 a(7), b(7);
    EXPECT_EQ(a.tables(), b.tables());
    EXPECT_EQ(a, b);
}

TEST(Tabulation, DifferentSeedsDiffer) {
    const Tabulation64 a(7), b(8);
    std::size_t differing = 0;
    for (std::size_t c = 0; c < 4; ++c)
        for (std::size_t i = 0; i < 256; ++i) differing += a.tables()[c][i] != b.tables()[c][i];
    EXPECT_GE(differing, 1u);
}

TEST(Tabulation, ZeroSeedIsValid) {
    const Tabulation64 h(0);
    EXPECT_EQ(h.seed(), 0u);
    std::size_t zeros = 0;
    for (const auto& table : h.tables())
        for (auto e : table) zeros += (e == 0);
    EXPECT_EQ(zeros, 0u);
}

TEST(Tabulation, ZeroKeyIsXorOfFirstEntries) {
    const Tabulation64 h(123);
    const auto& t = h.tables();
    EXPECT_EQ(h(0), t[0][0] ^ t[1][0] ^ t[2][0] ^ t[3][0]);
}

TEST(Tabulation, Pure) {
    const Tabulation64 h(99);
    for (std::uint32_t k : {0u, 1u, 0xdeadbeefu, 0xffffffffu}) EXPECT_EQ(h(k), h(k));
    EXPECT_EQ(h(0xdeadbeefu), Tabulation64(99)(0xdeadbeefu));
}

TEST(Tabulation, OutputBitsAreBalanced) {
    const Tabulation64 h(2024);
    std::mt19937_64 rng(5);
    std::array<std::size_t, 64> ones{};
    constexpr std::size_t kKeys = 1'000'000;
    for (std::size_t i = 0; i < kKeys; ++i) {
        const std::uint64_t v = h(static_cast<std::uint32_t>(rng()));
        for (std::size_t b = 0; b < 64; ++b) ones[b] += (v >> b) & 1U;
    }
    for (std::size_t b = 0; b < 64; ++b) {
        const double freq = static_cast<double>(ones[b]) / kKeys;
        EXPECT_NEAR(freq, 0.5, 0.005) << "bit " << b;
    }
}

TEST(Tabulation, NoCollisionsOnRandomDistinctPairs) {
    const Tabulation64 h(31337);
    std::mt19937_64 rng(17);
    std::size_t collisions = 0;
    for (std::size_t i = 0; i < 10'000'000; ++i) {
        const auto a = static_cast<std::uint32_t>(rng());
        const auto b = static_cast<std::uint32_t>(rng());
        if (a != b && h(a) == h(b)) ++collisions;
    }
    EXPECT_EQ(collisions, 0u);
}

TEST(Tabulation, ByteFlipIsFixedXorMask) {
    const Tabulation64 h(4242);
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t byte = rng() % 4;
        const std::uint32_t from = rng() & 0xff, to = rng() & 0xff;
        const std::uint64_t mask = h.tables()[byte][from] ^ h.tables()[byte][to];
        // Two unrelated contexts for the other three bytes.
        for (int ctx = 0; ctx < 2; ++ctx) {
            std::uint32_t key = static_cast<std::uint32_t>(rng());
            key = (key & ~(0xffU << (8 * byte))) | (from << (8 * byte));
            const std::uint32_t flipped = (key & ~(0xffU << (8 * byte))) | (to << (8 * byte));
            EXPECT_EQ(h(key) ^ h(flipped), mask);
        }
    }
}

TEST(BitHash, RangeAndPurity) {
    const BitHash g(77);
    for (std::uint32_t k = 0; k < 1000; ++k) {
        const unsigned v = g(k);
        EXPECT_LE(v, 1u);
        EXPECT_EQ(v, g(k));
        EXPECT_EQ(v, static_cast<unsigned>(g.base()(k) & 1U));
    }
}

TEST(BitHash, Balanced) {
    const BitHash g(555);
    std::mt19937_64 rng(9);
    std::size_t ones = 0;
    constexpr std::size_t kKeys = 1'000'000;
    for (std::size_t i = 0; i < kKeys; ++i) ones += g(static_cast<std::uint32_t>(rng()));
    EXPECT_NEAR(static_cast<double>(ones) / kKeys, 0.5, 0.005);
}

TEST(SplitMix64, MatchesReferenceSequence) {
    // First outputs of the reference implementation seeded with 1234567.
    cpsjoin::SplitMix64 gen(1234567);
    EXPECT_EQ(gen.next(), 6457827717110365317ULL);
    EXPECT_EQ(gen.next(), 3203168211198807973ULL);
    EXPECT_EQ(gen.next(), 9817491932198370423ULL);
}

#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "glm_bandit/rng.hpp"

using namespace glm_bandit;

// Known-answer vectors published with the Random123 reference implementation.
TEST(Philox, KnownAnswerZero) {
    const auto out = philox4x32_10({0, 0, 0, 0}, {0, 0});
    EXPECT_EQ(out[0], 0x6627e8d5u);
    EXPECT_EQ(out[1], 0xe169c58du);
    EXPECT_EQ(out[2], 0xbc57ac4cu);
    EXPECT_EQ(out[3], 0x9b00dbd8u);
}

TEST(Philox, KnownAnswerOnes) {
    const auto out = philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
    EXPECT_EQ(out[0], 0x408f276du);
    EXPECT_EQ(out[1], 0x41c83b0eu);
    EXPECT_EQ(out[2], 0xa20bc7c6u);
    EXPECT_EQ(out[3], 0x6d5451fdu);
}

TEST(Philox, KnownAnswerPi) {
    const auto out = philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
    EXPECT_EQ(out[0], 0xd16cfe09u);
    EXPECT_EQ(out[1], 0x94fdccebu);
    EXPECT_EQ(out[2], 0x5001e420u);
    EXPECT_EQ(out[3], 0x24126ea1u);
}

TEST(CounterRng, SameAddressSameStream) {
    CounterRng a(42, 3, Purpose::rewards, 17);
    CounterRng b(42, 3, Purpose::rewards, 17);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(CounterRng, AddressesGiveDistinctStreams) {
    std::set<std::uint64_t> firsts;
    for (std::uint32_t rep = 0; rep < 4; ++rep)
        for (std::uint32_t round = 0; round < 4; ++round)
            for (auto purpose : {Purpose::contexts, Purpose::rewards, Purpose::policy})
                for (std::uint32_t sub = 0; sub < 3; ++sub)
                    firsts.insert(CounterRng(7, rep, purpose, round, sub).next_u64());
    EXPECT_EQ(firsts.size(), 4u * 4u * 3u * 3u);
    EXPECT_NE(CounterRng(1, 0, Purpose::policy, 0).next_u64(), CounterRng(2, 0, Purpose::policy, 0).next_u64());
}

TEST(CounterRng, UniformRangeAndMoments) {
    CounterRng rng(9, 0, Purpose::validation, 0);
    const int n = 200000;
    double sum = 0.0;
    double sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        sum += u;
        sq += u * u;
    }
    EXPECT_NEAR(sum / n, 0.5, 3.0 * std::sqrt(1.0 / 12.0 / n));
    EXPECT_NEAR(sq / n - (sum / n) * (sum / n), 1.0 / 12.0, 0.002);
}

TEST(CounterRng, NormalMoments) {
    CounterRng rng(11, 0, Purpose::validation, 0);
    const int n = 200000;
    double sum = 0.0;
    double sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        ASSERT_TRUE(std::isfinite(z));
        sum += z;
        sq += z * z;
    }
    EXPECT_NEAR(sum / n, 0.0, 4.0 / std::sqrt(n));
    EXPECT_NEAR(sq / n, 1.0, 0.02);
}

TEST(CounterRng, BelowIsUniform) {
    CounterRng rng(5, 0, Purpose::policy, 0);
    int counts[7] = {};
    const int n = 70000;
    for (int i = 0; i < n; ++i) {
        const auto k = rng.below(7);
        ASSERT_LT(k, 7u);
        ++counts[k];
    }
    for (int c : counts) EXPECT_NEAR(c / static_cast<double>(n), 1.0 / 7.0, 0.01);
    EXPECT_EQ(rng.below(1), 0u);
}

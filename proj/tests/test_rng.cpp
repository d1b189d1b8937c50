#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "proxmh/rng.hpp"

using namespace proxmh;

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

TEST(RandomStream, SameSeedSameSequence) {
    RandomStream a(42), b(42);
    for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(RandomStream, SplitIgnoresParentPosition) {
    RandomStream a(7);
    const RandomStream before = a.split(3);
    for (int i = 0; i < 17; ++i) a.normal();
    RandomStream after = a.split(3);
    RandomStream copy = before;
    for (int i = 0; i < 100; ++i) ASSERT_EQ(copy.next_u64(), after.next_u64());
}

TEST(RandomStream, ChildrenAreDistinct) {
    const RandomStream root(1);
    std::set<std::uint64_t> firsts;
    for (std::uint64_t c = 0; c < 256; ++c) firsts.insert(root.split(c).split(StreamSite::Proposal).next_u64());
    EXPECT_EQ(firsts.size(), 256u);
    RandomStream s0 = root.split(0), s1 = RandomStream(1, 1);
    EXPECT_NE(s0.next_u64(), s1.next_u64());
}

TEST(RandomStream, UniformIsOpenInterval) {
    RandomStream r(9);
    double sum = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = r.uniform();
        ASSERT_GT(u, 0.0);
        ASSERT_LT(u, 1.0);
        sum += u;
    }
    EXPECT_NEAR(sum / n, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST(RandomStream, NormalMoments) {
    RandomStream r(11);
    const int n = 400000;
    double m1 = 0, m2 = 0, m4 = 0;
    for (int i = 0; i < n; ++i) {
        const double z = r.normal();
        m1 += z;
        m2 += z * z;
        m4 += z * z * z * z;
    }
    m1 /= n;
    m2 /= n;
    m4 /= n;
    EXPECT_NEAR(m1, 0.0, 4.0 / std::sqrt(n));
    EXPECT_NEAR(m2, 1.0, 4.0 * std::sqrt(2.0 / n));
    EXPECT_NEAR(m4, 3.0, 4.0 * std::sqrt(96.0 / n));
}

TEST(RandomStream, ExponentialMeanAndCoin) {
    RandomStream r(13);
    const int n = 200000;
    double s = 0;
    int heads = 0;
    for (int i = 0; i < n; ++i) {
        const double e = r.exponential();
        ASSERT_GE(e, 0.0);
        s += e;
        heads += r.coin() ? 1 : 0;
    }
    EXPECT_NEAR(s / n, 1.0, 4.0 / std::sqrt(n));
    EXPECT_NEAR(static_cast<double>(heads) / n, 0.5, 4.0 * 0.5 / std::sqrt(n));
}

TEST(Mix64, IsBijectiveOnSample) {
    std::set<std::uint64_t> seen;
    for (std::uint64_t i = 0; i < 10000; ++i) seen.insert(mix64(i));
    EXPECT_EQ(seen.size(), 10000u);
}

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "qpsde/noise.hpp"
#include "qpsde/stats.hpp"

using namespace qpsde;

namespace {

// Known-answer vectors published with the Random123 reference implementation.
TEST(Philox, KnownAnswerVectors) {
    EXPECT_EQ(Philox4x32::generate({0, 0, 0, 0}, {0, 0}),
              (Philox4x32::Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
    EXPECT_EQ(Philox4x32::generate({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}),
              (Philox4x32::Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
    EXPECT_EQ(Philox4x32::generate({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}),
              (Philox4x32::Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(HashedUniform, OpenUnitIntervalAndStreamsDiffer) {
    for (std::int64_t k = -1000; k < 1000; ++k) {
        const double u = hashed_uniform(3, k, 0);
        EXPECT_GT(u, 0.0);
        EXPECT_LT(u, 1.0);
        EXPECT_NE(u, hashed_uniform(3, k, 0, Stream::jitter));
    }
}

TEST(NormalQuantile, MatchesInverseOfErfc) {
    for (double u : {1e-12, 1e-6, 0.01, 0.2, 0.5, 0.77, 0.999, 1.0 - 1e-9}) {
        const double z = stats::normal_quantile(u);
        EXPECT_NEAR(0.5 * std::erfc(-z / std::sqrt(2.0)), u, 1e-14 + 1e-12 * u);
    }
}

TEST(SampleIncrement, DeterministicForSameSeedAndIndex) {
    const NoisePath a(7, 3, TimeGrid(0.01));
    const NoisePath b(7, 3, TimeGrid(0.01));
    const auto x = sample_increment(a, 3);
    const auto y = sample_increment(b, 3);
    ASSERT_EQ(x.size(), 3u);
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(x[j], y[j]);
    EXPECT_NE(x[0], x[1]);
}

TEST(SampleIncrement, WindowExtensionDoesNotChangeIncrements) {
    const NoisePath a(11, 2, TimeGrid(0.01));
    const NoisePath b(11, 2, TimeGrid(0.01).extended_to(-500).extended_to(500));
    for (std::int64_t k = -50; k < 50; ++k) EXPECT_EQ(a.increment(k), b.increment(k));
}

TEST(SampleIncrement, MeanOverSeedsWithinCltBound) {
    const double dt = 0.01;
    const std::size_t n = 100000;
    double s0 = 0.0, s1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto dw = sample_increment(NoisePath(i, 2, TimeGrid(dt)), 0);
        s0 += dw[0];
        s1 += dw[1];
    }
    const double bound = 4.0 * std::sqrt(dt / static_cast<double>(n));
    EXPECT_LT(std::abs(s0 / n), bound);
    EXPECT_LT(std::abs(s1 / n), bound);
}

TEST(SampleIncrement, VarianceOverSeedsWithinFivePercent) {
    const double dt = 0.01;
    const std::size_t n = 100000;
    std::vector<double> xs(n);
    for (std::size_t i = 0; i < n; ++i) xs[i] = sample_increment(NoisePath(i, 1, TimeGrid(dt)), 0)[0];
    EXPECT_NEAR(stats::variance(xs), dt, 0.05 * dt);
}

TEST(SampleIncrement, KolmogorovSmirnovAgainstStandardNormal) {
    const double dt = 0.004;
    const NoisePath w(2024, 1, TimeGrid(dt));
    std::vector<double> z;
    for (std::int64_t k = -5000; k < 5000; ++k) z.push_back(w.increment(k)[0] / std::sqrt(dt));
    EXPECT_LT(stats::ks_statistic_normal(z), stats::ks_critical(z.size(), 0.01));
}

TEST(SampleIncrement, DistinctIndicesUncorrelated) {
    const NoisePath w(5, 1, TimeGrid(1.0));
    std::vector<double> a, b;
    for (std::int64_t k = 0; k < 20000; ++k) {
        a.push_back(w.increment(2 * k)[0]);
        b.push_back(w.increment(2 * k + 1)[0]);
    }
    double cov = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) cov += a[i] * b[i];
    cov /= static_cast<double>(a.size());
    EXPECT_LT(std::abs(cov), 4.0 / std::sqrt(static_cast<double>(a.size())));
}

TEST(BrownianValue, ZeroAtOrigin) {
    const NoisePath w(9, 3, TimeGrid(0.1));
    for (double v : brownian_value(w, 0)) EXPECT_EQ(v, 0.0);
}

TEST(BrownianValue, PartialSumsAreBitwise) {
    const NoisePath w(9, 2, TimeGrid(0.1));
    const auto w2 = brownian_value(w, 2);
    const auto d0 = w.increment(0), d1 = w.increment(1);
    for (std::size_t j = 0; j < 2; ++j) EXPECT_EQ(w2[j], 0.0 + d0[j] + d1[j]);
    const auto wm1 = brownian_value(w, -1);
    const auto dm1 = w.increment(-1);
    for (std::size_t j = 0; j < 2; ++j) EXPECT_EQ(wm1[j], -dm1[j]);
}

TEST(Shift, IdentityAndGroupLaw) {
    const NoisePath w(21, 2, TimeGrid(0.01));
    const auto same = shift(w, 0);
    for (std::int64_t k = -20; k < 20; ++k) EXPECT_EQ(same.increment(k), w.increment(k));
    const auto back = shift(shift(w, 13), -13);
    for (std::int64_t k = -20; k < 20; ++k) EXPECT_EQ(back.increment(k), w.increment(k));
    const auto a = shift(shift(w, 3), 4), b = shift(w, 7);
    for (std::int64_t k = -20; k < 20; ++k) EXPECT_EQ(a.increment(k), b.increment(k));
}

TEST(Shift, RelabelsIndices) {
    const NoisePath w(4, 1, TimeGrid(0.01));
    const auto s = shift(w, 5);
    for (std::int64_t k = -10; k < 10; ++k) EXPECT_EQ(s.increment(k), w.increment(k + 5));
}

TEST(Shift, PropertyGroupLawForRandomShifts) {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<std::int64_t> u(-1000000, 1000000);
    const NoisePath w(31, 3, TimeGrid(0.001));
    for (int i = 0; i < 200; ++i) {
        const std::int64_t m = u(rng), n = u(rng), k = u(rng);
        EXPECT_EQ(shift(shift(w, m), n).increment(k), shift(w, m + n).increment(k));
    }
}

TEST(TimeGrid, RejectsBadInput) {
    EXPECT_THROW(TimeGrid(0.0), DomainError);
    EXPECT_THROW(TimeGrid(-1.0), DomainError);
    EXPECT_THROW(TimeGrid(0.1, 1, 3), DomainError);
    EXPECT_THROW(NoisePath(1, 0, TimeGrid(0.1)), DomainError);
    const TimeGrid g(0.25);
    EXPECT_EQ(g.time(4), 1.0);
    EXPECT_EQ(g.index_at_or_after(0.3), 2);
    EXPECT_EQ(g.nearest_index(-0.26), -1);
}

}  // namespace

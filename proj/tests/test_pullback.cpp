#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "qpsde/pullback.hpp"

using namespace qpsde;

namespace {

QPCoefficients::Spec ou_spec() {
    QPCoefficients::Spec s;
    s.dim = 1;
    s.tau1 = 1.0;
    s.tau2 = std::numbers::sqrt2;
    s.A = {1.0};
    s.F0 = {{1.0, 1, 0, 0.0, 0}, {1.0, 0, 1, 0.0, 0}};
    s.Sigma0 = {0.5};
    s.declared = {1.0, 0.0, 2.5, 1.0, 1.0, 1.0};
    return s;
}

QPCoefficients::Spec still_spec() {
    auto s = ou_spec();
    s.F0.clear();
    s.Sigma0 = {0.0};
    return s;
}

constexpr double kTol = 1e-6;
constexpr int kLevels = 40;
const std::vector<double> kZero{0.0};

TEST(LevelSpacing, DerivedFromAuditedRate) {
    const QPCoefficients c(ou_spec());
    PullbackConfig cfg;
    cfg.dt = 1e-3;
    EXPECT_EQ(resolve_level_steps(c, cfg), static_cast<std::int64_t>(std::ceil(std::log(10.0) / 1e-3)));
    cfg.level_steps = 17;
    EXPECT_EQ(resolve_level_steps(c, cfg), 17);
    EXPECT_THROW(level_steps_for_rate(-0.5, 1e-3), DomainError);
}

TEST(PullbackPhi, ConvergesAtTheLinearRate) {
    const QPCoefficients c(ou_spec());
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto r = pullback_phi(c, NoisePath(seed, 1, 1e-3), 0, std::vector<double>{10.0}, kTol, kLevels);
        EXPECT_TRUE(r.converged);
        EXPECT_NEAR(r.fitted_rate, 1.0, 0.1);
        EXPECT_EQ(r.value, r.levels.back().value);
    }
}

TEST(PullbackPhi, DeterministicEquilibriumIsZero) {
    const QPCoefficients c(still_spec());
    const NoisePath w(1, 1, 1e-3);
    const auto r = pullback_phi(c, w, 500, kZero, kTol, kLevels);
    EXPECT_TRUE(r.converged);
    EXPECT_EQ(r.value[0], 0.0);
    const auto from_three = pullback_phi(c, w, 500, std::vector<double>{3.0}, kTol, kLevels);
    EXPECT_LT(std::abs(from_three.value[0]), kTol);
}

TEST(PullbackPhi, LimitDoesNotDependOnTheStartingPoint) {
    const QPCoefficients c(ou_spec());
    const NoisePath w(4, 1, 1e-3);
    const auto a = pullback_phi(c, w, 1234, kZero, kTol, kLevels);
    const auto b = pullback_phi(c, w, 1234, std::vector<double>{10.0}, kTol, kLevels);
    ASSERT_TRUE(a.converged && b.converged);
    EXPECT_LT(std::abs(a.value[0] - b.value[0]), kTol);
}

TEST(PullbackPhi, GapsShrinkGeometrically) {
    const QPCoefficients c(ou_spec());
    const auto r = pullback_phi(c, NoisePath(5, 1, 1e-3), 0, std::vector<double>{10.0}, 1e-9, kLevels);
    ASSERT_GE(r.levels.size(), 4u);
    for (std::size_t i = 2; i < r.levels.size(); ++i) EXPECT_LE(r.levels[i].gap, 3.0 * r.levels[i - 1].gap);
    EXPECT_TRUE(std::isnan(r.levels[0].gap));
}

TEST(PullbackPhi, ReportsNonConvergence) {
    const QPCoefficients c(ou_spec());
    const auto r = pullback_K(c, NoisePath(6, 1, 1e-3), Reparam{}, 0, std::vector<double>{10.0}, 1e-6, 3, 10);
    EXPECT_FALSE(r.converged);
    EXPECT_EQ(r.levels.size(), 3u);
}

TEST(PullbackPhi, RejectsBadArguments) {
    const QPCoefficients c(ou_spec());
    const NoisePath w(1, 1, 1e-3);
    EXPECT_THROW(pullback_K(c, w, Reparam{}, 0, kZero, 0.0, 10, 5), DomainError);
    EXPECT_THROW(pullback_K(c, w, Reparam{}, 0, kZero, 1e-6, 1, 5), DomainError);
    EXPECT_THROW(pullback_K(c, w, Reparam{}, 0, kZero, 1e-6, 10, 0), DomainError);
    EXPECT_THROW(pullback_K(c, w, Reparam{}, 0, std::vector<double>{NAN}, 1e-6, 10, 5), DomainError);
    auto s = ou_spec();
    s.A = {-1.0};
    EXPECT_THROW(pullback_phi(QPCoefficients(s), w, 0, kZero, kTol, kLevels), DomainError);
}

TEST(PullbackPhiTilde, PeriodicInBothParametersBitwise) {
    const QPCoefficients c(ou_spec());
    const NoisePath w(7, 1, 1e-3);
    const HullOffset t(0.3), s(1.1);
    const auto base = pullback_phi_tilde(c, w, t, s, kZero, kTol, kLevels);
    const auto t_turn = pullback_phi_tilde(c, w, HullOffset(0.3, 0, 1), s, kZero, kTol, kLevels);
    const auto s_turn = pullback_phi_tilde(c, w, t, HullOffset(1.1, 0, -3), kZero, kTol, kLevels);
    EXPECT_EQ(t_turn.value, base.value);
    EXPECT_EQ(s_turn.value, base.value);
}

TEST(PullbackPhiTilde, DiagonalIsPhiOnShiftedNoise) {
    const QPCoefficients c(ou_spec());
    const NoisePath w(8, 1, 1e-3);
    for (std::int64_t m : {0, 370, -1234}) {
        const HullOffset r(0.0, m);
        const auto tilde = pullback_phi_tilde(c, w, r, r, kZero, kTol, kLevels);
        const auto phi = pullback_phi(c, w.shifted(-m), m, kZero, kTol, kLevels);
        EXPECT_LE(std::abs(tilde.value[0] - phi.value[0]), 2.0 * kTol);
    }
}

TEST(VerifyRandomPath, ForwardFlowMapsPullbackToPullback) {
    const QPCoefficients c(ou_spec());
    const NoisePath w(9, 1, 1e-3);
    const auto s = pullback_phi(c, w, 0, kZero, kTol, kLevels);
    const auto t = pullback_phi(c, w, 2000, kZero, kTol, kLevels);
    EXPECT_LT(verify_random_path(c, w, s.value, 0, t.value, 2000), 5e-6);
    EXPECT_EQ(verify_random_path(c, w, s.value, 0, s.value, 0), 0.0);
    EXPECT_THROW(verify_random_path(c, w, s.value, 5, t.value, 4), DomainError);
}

TEST(VerifyRandomPath, DeterministicEquilibriumIsExact) {
    const QPCoefficients c(still_spec());
    const NoisePath w(9, 1, 1e-3);
    EXPECT_EQ(verify_random_path(c, w, kZero, 0, kZero, 2000), 0.0);
}

TEST(LevelsCsv, OneRowPerLevel) {
    const QPCoefficients c(ou_spec());
    const auto r = pullback_K(c, NoisePath(1, 1, 0.5), Reparam{}, 0, kZero, 1e-3, 4, 2);
    std::ostringstream os;
    write_levels_csv(os, r);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, "s_k,gap_k");
    std::getline(is, line);
    EXPECT_EQ(line, "-1,nan");
    std::size_t rows = 1;
    while (std::getline(is, line)) ++rows;
    EXPECT_EQ(rows, r.levels.size());
}

}  // namespace

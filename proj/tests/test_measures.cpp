#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <vector>

#include "qpsde/measures.hpp"

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

PullbackConfig cfg() {
    PullbackConfig c;
    c.dt = 1e-3;
    c.tol = 1e-6;
    c.level_steps = 2303;
    return c;
}

// Mean of the stationary O-U solution with drift -x + sin(w1 t) + sin(w2 t):
// int_{-inf}^t e^{-(t-u)} sin(w u) du = (sin wt - w cos wt) / (1 + w^2).
double ou_mean(double t) {
    double m = 0.0;
    for (double w : {2.0 * std::numbers::pi, 2.0 * std::numbers::pi / std::numbers::sqrt2})
        m += (std::sin(w * t) - w * std::cos(w * t)) / (1.0 + w * w);
    return m;
}

EmpiricalMeasure cloud(std::vector<double> xs) { return EmpiricalMeasure(1, std::move(xs)); }

TEST(EstimateRho, MeanMatchesAnalyticMean) {
    const QPCoefficients c(ou_spec());
    const std::size_t n = 10000;
    const auto mu = estimate_rho(c, 0.25, n, 1, cfg());
    ASSERT_EQ(mu.size(), n);
    const double sd = 0.5 / std::sqrt(2.0);
    EXPECT_LT(std::abs(mu.mean()[0] - ou_mean(0.25)), 4.0 * sd / std::sqrt(static_cast<double>(n)));
    EXPECT_EQ(mu.meta().seed_lo, 1u);
    EXPECT_EQ(mu.meta().seed_hi, n);
}

TEST(EstimateRho, SecondMomentWithinTheAuditedBound) {
    const QPCoefficients c(ou_spec());
    const auto mu = estimate_rho(c, 0.6, 2000, 50, cfg());
    const auto diss = check_dissipativity(c, 4000, 10.0, 0);
    const auto reg = check_lipschitz_and_bounds(c, 4000, 10.0, 1);
    EXPECT_LE(mu.second_moment(), second_moment_bound(diss.alpha_hat, reg.beta_hat, reg.M_hat));
}

TEST(EstimateRho, DeterministicSpecGivesIdenticalSamples) {
    auto s = ou_spec();
    s.Sigma0 = {0.0};
    const QPCoefficients c(s);
    const auto mu = estimate_rho(c, 0.4, 50, 1, cfg());
    for (std::size_t i = 1; i < mu.size(); ++i) EXPECT_EQ(mu.at(i)[0], mu.at(0)[0]);
    EXPECT_EQ(mu.covariance()[0], 0.0);
    EXPECT_NEAR(mu.at(0)[0], ou_mean(0.4), 2e-3);
}

TEST(EstimateRho, ReportsNonConvergedSeeds) {
    const QPCoefficients c(ou_spec());
    auto k = cfg();
    k.max_levels = 2;
    k.tol = 1e-12;
    try {
        estimate_rho(c, 0.0, 3, 40, k);
        FAIL() << "expected a convergence error";
    } catch (const ConvergenceError& e) {
        EXPECT_EQ(e.failed_seeds(), (std::vector<std::uint64_t>{40, 41, 42}));
    }
}

TEST(EstimateRhoTilde, WholePeriodShiftGivesIdenticalClouds) {
    const QPCoefficients c(ou_spec());
    const auto a = estimate_rho_tilde(c, HullOffset(0.3), HullOffset(0.8), 200, 7, cfg());
    const auto b = estimate_rho_tilde(c, HullOffset(0.3, 0, 1), HullOffset(0.8), 200, 7, cfg());
    const auto e = estimate_rho_tilde(c, HullOffset(0.3), HullOffset(0.8, 0, 2), 200, 7, cfg());
    EXPECT_EQ(a.samples(), b.samples());
    EXPECT_EQ(a.samples(), e.samples());
}

TEST(EstimateRhoTilde, PeriodShiftOnDisjointSeedsIsIndistinguishable) {
    const QPCoefficients c(ou_spec());
    const auto a = estimate_rho_tilde(c, 0.3, 0.8, 1000, 1, cfg());
    const auto b = estimate_rho_tilde(c, 0.3, 0.8 + std::numbers::sqrt2, 1000, 100001, cfg());
    EXPECT_TRUE(permutation_test(a, b, 200, 0.01, 3).indistinguishable);
}

TEST(EstimateRhoTilde, DiagonalIsEstimateRho) {
    const QPCoefficients c(ou_spec());
    EXPECT_EQ(estimate_rho_tilde(c, 0.7, 0.7, 100, 9, cfg()).samples(), estimate_rho(c, 0.7, 100, 9, cfg()).samples());
}

TEST(EstimateRhoSeries, AgreesWithDirectPullbacks) {
    const QPCoefficients c(ou_spec());
    const auto k = cfg();
    const auto series = estimate_rho_series(c, 0, {0, 500}, 50, 11, k);
    ASSERT_EQ(series.size(), 2u);
    for (std::size_t i = 0; i < 50; ++i) {
        const NoisePath w(11 + i, 1, k.dt);
        const auto direct = pullback_phi(c, w, 500, std::vector<double>{0.0}, k.tol, k.max_levels, k);
        EXPECT_NEAR(series[1].at(i)[0], direct.value[0], 3.0 * k.tol);
    }
    EXPECT_EQ(series[0].samples(), estimate_rho(c, 0.0, 50, 11, k).samples());
}

TEST(TransportDistance, IdentityIsZero) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    std::vector<double> xs(500), ys(1000);
    for (double& x : xs) x = g(rng);
    for (double& y : ys) y = g(rng);
    const auto mu = cloud(xs);
    EXPECT_EQ(transport_distance(mu, mu, TransportKind::w1_sorted), 0.0);
    EXPECT_EQ(transport_distance(mu, mu, TransportKind::energy), 0.0);
    const auto two = EmpiricalMeasure(2, ys);
    EXPECT_EQ(transport_distance(two, two, TransportKind::energy), 0.0);
}

TEST(TransportDistance, PointMasses) {
    const auto a = cloud(std::vector<double>(10, 0.0));
    const auto b = cloud(std::vector<double>(10, 3.0));
    const auto c = cloud(std::vector<double>(7, 3.0));
    EXPECT_EQ(transport_distance(a, b, TransportKind::w1_sorted), 3.0);
    EXPECT_NEAR(transport_distance(a, c, TransportKind::w1_sorted), 3.0, 1e-12);
    // 2 E|X - Y| - E|X - X'| - E|Y - Y'| = 2 * 3
    EXPECT_NEAR(transport_distance(a, c, TransportKind::energy), 6.0, 1e-12);
}

TEST(TransportDistance, TranslatedNormals) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g;
    std::vector<double> xs(10000), ys(10000);
    for (double& x : xs) x = g(rng);
    for (double& y : ys) y = 1.0 + g(rng);
    EXPECT_NEAR(transport_distance(cloud(xs), cloud(ys), TransportKind::w1_sorted), 1.0, 0.05);
}

TEST(TransportDistance, EnergyMatchesPairwiseSums) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    std::vector<double> xs(60), ys(45);
    for (double& x : xs) x = g(rng);
    for (double& y : ys) y = 0.5 + 2.0 * g(rng);
    auto mean_abs = [](const std::vector<double>& a, const std::vector<double>& b) {
        double s = 0.0;
        for (double x : a)
            for (double y : b) s += std::abs(x - y);
        return s / static_cast<double>(a.size() * b.size());
    };
    const double expected = 2.0 * mean_abs(xs, ys) - mean_abs(xs, xs) - mean_abs(ys, ys);
    EXPECT_NEAR(transport_distance(cloud(xs), cloud(ys), TransportKind::energy), expected, 1e-12);
}

TEST(TransportDistance, RejectsMismatchedInputs) {
    const auto a = cloud({1.0, 2.0});
    const auto b = EmpiricalMeasure(2, {1.0, 2.0});
    EXPECT_THROW(transport_distance(a, b, TransportKind::energy), DomainError);
    EXPECT_THROW(transport_distance(b, b, TransportKind::w1_sorted), DomainError);
    EXPECT_THROW(cloud({}), DomainError);
}

TEST(PermutationTest, DetectsATranslation) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g;
    std::vector<double> xs(500), ys(500);
    for (double& x : xs) x = g(rng);
    for (double& y : ys) y = 0.5 + g(rng);
    const auto r = permutation_test(cloud(xs), cloud(ys), 200, 0.01, 1);
    EXPECT_FALSE(r.indistinguishable);
    EXPECT_DOUBLE_EQ(r.p_value, 1.0 / 201.0);
}

TEST(Pushforward, EntranceProperty) {
    const QPCoefficients c(ou_spec());
    const auto k = cfg();
    const auto rho_s = estimate_rho(c, 0.0, 1000, 1, k);
    const auto pushed = pushforward(c, rho_s, 0, 500, 500001, k.dt);
    const auto rho_t = estimate_rho(c, HullOffset(0.0, 500), 1000, 200001, k);
    EXPECT_TRUE(permutation_test(pushed, rho_t, 200, 0.01, 5).indistinguishable);
    const auto stale = permutation_test(rho_s, rho_t, 200, 0.01, 5);
    EXPECT_FALSE(stale.indistinguishable);
}

TEST(Pushforward, EmptyIntervalIsIdentity) {
    const QPCoefficients c(ou_spec());
    const auto mu = cloud({0.1, -0.3, 2.0});
    EXPECT_EQ(pushforward(c, mu, 7, 7, 1, 1e-3).samples(), mu.samples());
    EXPECT_THROW(pushforward(c, mu, 7, 6, 1, 1e-3), DomainError);
}

TEST(Pushforward, DeterministicPointMassFollowsTheFlow) {
    auto s = ou_spec();
    s.Sigma0 = {0.0};
    const QPCoefficients c(s);
    const auto mu = cloud(std::vector<double>(5, 2.0));
    const auto pushed = pushforward(c, mu, 0, 400, 1, 1e-3);
    const auto path = integrate_u(c, NoisePath(99, 1, 1e-3), 0, 400, std::vector<double>{2.0});
    for (std::size_t i = 0; i < pushed.size(); ++i) EXPECT_EQ(pushed.at(i)[0], path.back()[0]);
}

TEST(MeasureCsv, RoundTrip) {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> g;
    std::vector<double> xs(200);
    for (double& x : xs) x = g(rng) * 1e-7 + 1e5;
    const EmpiricalMeasure mu(2, xs, MeasureMeta{"rho", 0.25, 0.5, 3, 102});
    std::stringstream ss;
    write_measure_csv(ss, mu);
    const auto back = read_measure_csv(ss, measure_meta_json(mu));
    EXPECT_EQ(back.samples(), mu.samples());
    EXPECT_EQ(back.weights(), mu.weights());
    EXPECT_EQ(back.meta().label, "rho");
    EXPECT_EQ(back.meta().s, 0.5);
    EXPECT_EQ(back.meta().seed_hi, 102u);
}

}  // namespace

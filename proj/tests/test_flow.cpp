#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <vector>

#include "qpsde/flow.hpp"

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

QPCoefficients::Spec saturating_2d() {
    QPCoefficients::Spec s;
    s.dim = 2;
    s.tau1 = 1.0;
    s.tau2 = std::numbers::sqrt2;
    s.A = {1.0, 0.2, 0.2, 1.5};
    s.F0 = {{0.8, 1, 0, 0.1, 0}, {0.5, 0, 1, 0.0, 1}};
    s.F1 = {{0.3, 1, 1, 0.4, 0}};
    s.G = {{0.7, 0, 1, 0.0, 0}};
    s.Sigma0 = {0.5, 0.0, 0.1, 0.4};
    s.Sigma1 = {0.2, 0.0, 0.0, 0.1};
    s.nonlinearity = Nonlinearity::tanh;
    return s;
}

const std::vector<double> kOne{1.0};

TEST(IntegrateU, ExponentialDecayWithoutNoise) {
    auto s = ou_spec();
    s.F0.clear();
    s.Sigma0 = {0.0};
    const QPCoefficients c(s);
    const NoisePath w(1, 1, 1e-3);
    const auto tr = integrate_u(c, w, 0, 1000, kOne);
    EXPECT_NEAR(tr.back()[0], std::exp(-1.0), 1e-3);
}

TEST(IntegrateU, EquilibriumStaysAtZero) {
    auto s = ou_spec();
    s.F0.clear();
    s.Sigma0 = {0.0};
    const QPCoefficients c(s);
    const auto tr = integrate_u(c, NoisePath(2, 1, 1e-2), -50, 50, std::vector<double>{0.0});
    for (double v : tr.values) EXPECT_EQ(v, 0.0);
}

TEST(IntegrateU, ShapeAndInitialValue) {
    const QPCoefficients c(saturating_2d());
    const std::vector<double> x0{0.123456789, -7.5};
    const auto tr = integrate_u(c, NoisePath(3, 2, 1e-2), -7, 13, x0);
    EXPECT_EQ(tr.size(), 21u);
    EXPECT_EQ(tr.start_index, -7);
    EXPECT_EQ(tr.end_index(), 13);
    EXPECT_EQ(tr.at(0)[0], x0[0]);
    EXPECT_EQ(tr.at(0)[1], x0[1]);
    EXPECT_EQ(integrate_u(c, NoisePath(3, 2, 1e-2), 5, 5, x0).size(), 1u);
}

TEST(IntegrateU, ExplosionReportsFirstBadIndex) {
    auto s = ou_spec();
    s.A = {-10.0};
    const QPCoefficients c(s);
    try {
        integrate_u(c, NoisePath(1, 1, 0.5), 0, 100, std::vector<double>{1e300});
        FAIL() << "expected an explosion";
    } catch (const ExplosionError& e) {
        // each step multiplies the state by 1 + 10 * 0.5; the noise is negligible at this scale
        std::int64_t k = 0;
        for (double x = 1e300; std::isfinite(x); x *= 6.0) ++k;
        EXPECT_EQ(e.index(), k);
    }
}

TEST(IntegrateU, RejectsBadArguments) {
    const QPCoefficients c(ou_spec());
    const NoisePath w(1, 1, 1e-2);
    EXPECT_THROW(integrate_u(c, w, 5, 4, kOne), DomainError);
    EXPECT_THROW(integrate_u(c, w, 0, 4, std::vector<double>{1.0, 2.0}), DomainError);
    EXPECT_THROW(integrate_u(c, w, 0, 4, std::vector<double>{NAN}), DomainError);
    EXPECT_THROW(integrate_u(c, NoisePath(1, 2, 1e-2), 0, 4, kOne), DomainError);
}

// Coarse Euler-Maruyama driven by sums of fine increments, so both runs see the same Brownian path.
std::vector<double> coarse_path(const QPCoefficients& c, const NoisePath& fine, int ratio, std::int64_t n_coarse) {
    const double dt = fine.dt() * ratio;
    std::vector<double> x{1.0}, out{1.0}, dw(1), frame(3);
    StepScratch scratch(1);
    for (std::int64_t k = 0; k < n_coarse; ++k) {
        double sum = 0.0;
        for (int j = 0; j < ratio; ++j) sum += fine.increment(k * ratio + j)[0];
        dw[0] = sum;
        compute_frame(c, Reparam{}, k, dt, frame.data());
        em_step(c, frame.data(), x, dw, dt, scratch);
        out.push_back(x[0]);
    }
    return out;
}

TEST(IntegrateU, StrongOrderOneForAdditiveNoise) {
    const QPCoefficients c(ou_spec());
    const double fine_dt = 1e-5;
    const std::int64_t n_fine = 100000;
    double err_coarse = 0.0, err_half = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const NoisePath fine(seed, 1, fine_dt);
        const auto ref = integrate_u(c, fine, 0, n_fine, kOne);
        auto max_err = [&](int ratio) {
            const auto path = coarse_path(c, fine, ratio, n_fine / ratio);
            double e = 0.0;
            for (std::size_t k = 0; k < path.size(); ++k)
                e = std::max(e, std::abs(path[k] - ref.values[k * static_cast<std::size_t>(ratio)]));
            return e;
        };
        err_coarse += max_err(200);
        err_half += max_err(100);
    }
    const double ratio = err_half / err_coarse;
    EXPECT_GE(ratio, 0.4);
    EXPECT_LE(ratio, 0.6);
}

TEST(IntegrateU, SemiFlowOnTheGrid) {
    const QPCoefficients c(saturating_2d());
    const NoisePath w(8, 2, 1e-2);
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<std::int64_t> u(-300, 300);
    const std::vector<double> x0{1.0, -2.0};
    for (int i = 0; i < 20; ++i) {
        std::int64_t a = u(rng), b = u(rng), m = u(rng);
        if (a > b) std::swap(a, b);
        m = std::clamp(m, a, b);
        const auto whole = integrate_u(c, w, a, b, x0);
        const auto first = integrate_u(c, w, a, m, x0);
        const auto second = integrate_u(c, w, m, b, first.back());
        EXPECT_EQ(second.values, std::vector<double>(whole.values.begin() + (m - a) * 2, whole.values.end()));
    }
}

TEST(IntegrateK, ZeroReparameterisationIsU) {
    const QPCoefficients c(saturating_2d());
    const NoisePath w(4, 2, 1e-2);
    const std::vector<double> x0{0.5, 0.5};
    EXPECT_EQ(integrate_K(c, w, 0.0, 0.0, -100, 200, x0).values, integrate_u(c, w, -100, 200, x0).values);
}

TEST(IntegrateK, WholePeriodsInTheParametersAreBitwise) {
    const QPCoefficients c(saturating_2d());
    const NoisePath w(5, 2, 1e-2);
    const std::vector<double> x0{-1.0, 2.0};
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ur(-3.0, 3.0);
    std::uniform_int_distribution<std::int64_t> un(-20, 20);
    for (int i = 0; i < 20; ++i) {
        const double r1 = ur(rng), r2 = ur(rng);
        const auto base = integrate_K(c, w, r1, r2, 0, 300, x0);
        const Reparam turned{HullOffset(r1, 0, un(rng)), HullOffset(r2, 0, un(rng))};
        EXPECT_EQ(integrate_K(c, w, turned, 0, 300, x0).values, base.values);
    }
}

TEST(IntegrateK, DiagonalReparameterisationIsShiftedFlow) {
    const QPCoefficients c(saturating_2d());
    const NoisePath w(6, 2, 1e-3);
    const std::vector<double> x0{0.3, -0.4};
    for (std::int64_t m : {0, 1, 250, -731}) {
        const Reparam diag = Reparam::diagonal(HullOffset(0.0, m));
        const auto k = integrate_K(c, w, diag, 0, 1000, x0);
        // u(t + r, s + r, x) on theta_{-r} w, as a path over [s + r, t + r].
        const auto u = integrate_u(c, w.shifted(-m), m, 1000 + m, x0);
        EXPECT_EQ(k.values, u.values) << "m=" << m;
        EXPECT_EQ(integrate_u_r(c, w, m, 0, 1000, x0).values, k.values);
    }
}

TEST(IntegrateK, DiagonalReparameterisationNeedsTheMatchingNoiseShift) {
    const QPCoefficients c(ou_spec());
    const NoisePath w(6, 1, 1e-3);
    const std::int64_t m = 250;
    const auto k = integrate_K(c, w, Reparam::diagonal(HullOffset(0.0, m)), 0, 1000, kOne);
    const auto wrong = integrate_u(c, w.shifted(m), m, 1000 + m, kOne);
    EXPECT_GT(max_abs_deviation(k, wrong), 1e-3);
}

TEST(ShiftIdentity, ZeroShiftIsExact) {
    const QPCoefficients c(saturating_2d());
    EXPECT_EQ(check_shift_identity(c, NoisePath(1, 2, 1e-3), 0.3, 0.9, 0, 0, 2000, std::vector<double>{1.0, 1.0}), 0.0);
}

TEST(ShiftIdentity, ExactForRandomParameters) {
    const QPCoefficients c(ou_spec());
    const NoisePath w(2, 1, 1e-3);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> ur(-5.0, 5.0);
    for (int i = 0; i < 10; ++i) {
        const double r1 = ur(rng), r2 = ur(rng);
        EXPECT_EQ(check_shift_identity(c, w, r1, r2, 137, -500, 1500, kOne), 0.0);
        EXPECT_GT(shift_mismatch(c, w, Reparam{r1, r2}, 137, 138, -500, 1500, kOne), 0.0);
    }
}

TEST(ShiftIdentity, ExactForSaturatingFamilyAndLargeShifts) {
    const QPCoefficients c(saturating_2d());
    const NoisePath w(3, 2, 1e-3);
    for (std::int64_t m : {-1000000, -1, 1, 999983})
        EXPECT_EQ(check_shift_identity(c, w, 0.25, -1.75, m, 0, 1000, std::vector<double>{2.0, -1.0}), 0.0);
}

TEST(Contraction, SlopeMatchesLinearRate) {
    const QPCoefficients c(ou_spec());
    const double dt = 1e-3;
    const auto fit = contraction_slope(c, NoisePath(4, 1, dt), 0, 8000, std::vector<double>{5.0},
                                       std::vector<double>{-5.0}, 1000);
    // additive noise: X - Y is multiplied by (1 - dt) each step
    EXPECT_NEAR(fit.slope, std::log1p(-dt) / dt, 1e-6);
    EXPECT_GT(fit.points, 6000u);
}

TEST(Contraction, SaturatingFamilyContractsAtLeastAtTheDissipativeRate) {
    const QPCoefficients c(saturating_2d());
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto fit = contraction_slope(c, NoisePath(seed, 2, 1e-3), 0, 8000, std::vector<double>{5.0, 5.0},
                                           std::vector<double>{-5.0, -5.0}, 1000);
        EXPECT_LT(fit.slope, -0.5);
    }
}

TEST(TrajectoryCsv, HeaderAndRows) {
    const QPCoefficients c(saturating_2d());
    const auto tr = integrate_K(c, NoisePath(1, 2, 0.25), 0.5, 0.0, 0, 4, std::vector<double>{1.0, 0.0});
    std::ostringstream os;
    write_trajectory_csv(os, tr);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line.rfind("# flavor=K dt=0.25", 0), 0u);
    std::getline(is, line);
    EXPECT_EQ(line, "time,x_1,x_2");
    std::getline(is, line);
    EXPECT_EQ(line, "0,1,0");
    int rows = 1;
    while (std::getline(is, line)) ++rows;
    EXPECT_EQ(rows, 5);
}

}  // namespace

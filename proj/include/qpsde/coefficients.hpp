#pragma once

// Quasi-periodic coefficient pair (b~, sigma~) in a declarative family:
//
//   b~(t1, t2, x)     = -A x + F1(t1, t2) h(x) + F0(t1, t2)
//   sigma~(t1, t2, x) = Sigma0 + G(t1, t2) diag(m(x)) Sigma1
//
// F0 is a vector trigonometric sum, F1 and G scalar ones, each term of the form
// amp * sin(2 pi (n1 t1 / tau1 + n2 t2 / tau2) + phase). With the tanh nonlinearity
// h = m = tanh componentwise; with `none` the F1 term is absent and m = 1, so the
// diffusion is the state-independent Sigma0 + G Sigma1.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "qpsde/errors.hpp"
#include "qpsde/stats.hpp"

namespace qpsde {

/// Time argument of one hull slot: `value + turns * period`. Whole turns are kept as an
/// integer so periodicity in that slot holds bitwise.
struct HullArg {
    double value = 0.0;
    std::int64_t turns = 0;

    HullArg() = default;
    HullArg(double v, std::int64_t n = 0) : value(v), turns(n) {}  // NOLINT(google-explicit-constructor)
};

/// t reduced into [0, tau). fmod is exact, so the only rounding is the wrap of negatives.
inline double reduce_mod(double t, double tau) noexcept {
    double y = std::fmod(t, tau);
    if (y < 0.0) y += tau;
    if (y >= tau) y = 0.0;
    return y;
}

enum class Nonlinearity { none, tanh };

inline std::string to_string(Nonlinearity h) { return h == Nonlinearity::tanh ? "tanh" : "none"; }

struct TrigTerm {
    double amplitude = 0.0;
    int n1 = 0;  // harmonic on tau1
    int n2 = 0;  // harmonic on tau2
    double phase = 0.0;
    std::size_t component = 0;  // only meaningful for vector sums (F0)
};

/// Regularity constants declared by the user; audited, never assumed.
struct DeclaredConstants {
    double alpha = 0.0;  // dissipativity rate
    double beta = 0.0;   // Lipschitz constant of sigma~ in x
    double M = 0.0;      // bound of |b~(.,.,0)| + ||sigma~(.,.,0)||
    double gamma = 1.0;  // Hoelder exponent in time
    double kappa = 1.0;  // growth order (fixed to 1 for this family)
    double ell = 0.0;    // growth constant
};

/// Reduced phases of a hull point: theta_i = (t_i mod tau_i) / tau_i in [0, 1).
struct HullPhase {
    double theta1 = 0.0;
    double theta2 = 0.0;
};

/// Time-dependent part of the coefficients at one hull point.
struct FrameView {
    std::span<const double> f0;
    double f1 = 0.0;
    double g = 0.0;
};

class QPCoefficients {
public:
    struct Spec {
        std::size_t dim = 1;
        double tau1 = 1.0;
        double tau2 = std::numbers::sqrt2;
        std::vector<double> A;  // d x d row-major, symmetric
        std::vector<TrigTerm> F0;
        std::vector<TrigTerm> F1;
        std::vector<TrigTerm> G;
        std::vector<double> Sigma0;  // d x d row-major
        std::vector<double> Sigma1;  // d x d row-major, zero if empty
        Nonlinearity nonlinearity = Nonlinearity::none;
        DeclaredConstants declared;
        bool rationally_independent = true;  // declared, not verifiable in floating point
    };

    explicit QPCoefficients(Spec spec) : s_(std::move(spec)) { validate(); }

    std::size_t dim() const noexcept { return s_.dim; }
    double tau1() const noexcept { return s_.tau1; }
    double tau2() const noexcept { return s_.tau2; }
    const Spec& spec() const noexcept { return s_; }
    const DeclaredConstants& declared() const noexcept { return s_.declared; }
    Nonlinearity nonlinearity() const noexcept { return s_.nonlinearity; }

    double A(std::size_t i, std::size_t j) const noexcept { return s_.A[i * s_.dim + j]; }
    double sigma0(std::size_t i, std::size_t j) const noexcept { return s_.Sigma0[i * s_.dim + j]; }
    double sigma1(std::size_t i, std::size_t j) const noexcept { return s_.Sigma1[i * s_.dim + j]; }

    bool has_state_coupling() const noexcept { return s_.nonlinearity == Nonlinearity::tanh; }
    bool is_ornstein_uhlenbeck() const noexcept {
        return s_.nonlinearity == Nonlinearity::none || (s_.F1.empty() && (s_.G.empty() || sigma1_is_zero()));
    }

    HullPhase phase(HullArg t1, HullArg t2) const {
        if (!std::isfinite(t1.value) || !std::isfinite(t2.value))
            throw DomainError("QPCoefficients: non-finite time argument");
        return {reduce_mod(t1.value, s_.tau1) / s_.tau1, reduce_mod(t2.value, s_.tau2) / s_.tau2};
    }

    /// Writes F0 into f0 (size d) and returns (F1, G).
    void frame(HullPhase ph, std::span<double> f0, double& f1, double& g) const noexcept {
        std::fill(f0.begin(), f0.end(), 0.0);
        for (const auto& term : s_.F0) f0[term.component] += trig(term, ph);
        f1 = 0.0;
        if (has_state_coupling())
            for (const auto& term : s_.F1) f1 += trig(term, ph);
        g = 0.0;
        for (const auto& term : s_.G) g += trig(term, ph);
    }

    /// out = -A x + F1 h(x) + F0.
    void drift_from_frame(const FrameView& fr, std::span<const double> x, std::span<double> out) const noexcept {
        const std::size_t d = s_.dim;
        for (std::size_t i = 0; i < d; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < d; ++j) acc -= s_.A[i * d + j] * x[j];
            if (has_state_coupling()) acc += fr.f1 * std::tanh(x[i]);
            out[i] = acc + fr.f0[i];
        }
    }

    /// sigma~ as a d x d row-major matrix.
    void diffusion_from_frame(const FrameView& fr, std::span<const double> x, std::span<double> out) const noexcept {
        const std::size_t d = s_.dim;
        for (std::size_t i = 0; i < d; ++i) {
            const double mod = has_state_coupling() ? std::tanh(x[i]) : 1.0;
            for (std::size_t j = 0; j < d; ++j) {
                const double s1 = s_.Sigma1.empty() ? 0.0 : s_.Sigma1[i * d + j];
                out[i * d + j] = s_.Sigma0[i * d + j] + fr.g * mod * s1;
            }
        }
    }

    /// out = sigma~ dW, using the same entries as diffusion_from_frame.
    void diffusion_times(const FrameView& fr, std::span<const double> x, std::span<const double> dw,
                         std::span<double> out) const noexcept {
        const std::size_t d = s_.dim;
        for (std::size_t i = 0; i < d; ++i) {
            const double mod = has_state_coupling() ? std::tanh(x[i]) : 1.0;
            double acc = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                const double s1 = s_.Sigma1.empty() ? 0.0 : s_.Sigma1[i * d + j];
                acc += (s_.Sigma0[i * d + j] + fr.g * mod * s1) * dw[j];
            }
            out[i] = acc;
        }
    }

    /// b~(t1, t2, x) - b~(t1, t2, y) from the structure of the family (F0 cancels exactly).
    void drift_difference(HullPhase ph, std::span<const double> x, std::span<const double> y,
                          std::span<double> out) const {
        std::vector<double> f0(s_.dim);
        double f1 = 0.0, g = 0.0;
        frame(ph, f0, f1, g);
        const std::size_t d = s_.dim;
        for (std::size_t i = 0; i < d; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < d; ++j) acc -= s_.A[i * d + j] * (x[j] - y[j]);
            if (has_state_coupling()) acc += f1 * (std::tanh(x[i]) - std::tanh(y[i]));
            out[i] = acc;
        }
    }

private:
    static double trig(const TrigTerm& t, HullPhase ph) noexcept {
        const double arg = 2.0 * std::numbers::pi * (t.n1 * ph.theta1 + t.n2 * ph.theta2) + t.phase;
        return t.amplitude * std::sin(arg);
    }

    bool sigma1_is_zero() const noexcept {
        return std::all_of(s_.Sigma1.begin(), s_.Sigma1.end(), [](double v) { return v == 0.0; });
    }

    void validate() {
        const std::size_t d = s_.dim;
        if (d == 0) throw DomainError("QPCoefficients: dim must be positive");
        if (!(s_.tau1 > 0.0) || !(s_.tau2 > 0.0) || !std::isfinite(s_.tau1) || !std::isfinite(s_.tau2))
            throw DomainError("QPCoefficients: periods must be positive and finite");
        if (s_.A.size() != d * d) throw DomainError("QPCoefficients: A must be d x d");
        if (s_.Sigma0.size() != d * d) throw DomainError("QPCoefficients: Sigma0 must be d x d");
        if (!s_.Sigma1.empty() && s_.Sigma1.size() != d * d)
            throw DomainError("QPCoefficients: Sigma1 must be d x d or empty");
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < i; ++j)
                if (s_.A[i * d + j] != s_.A[j * d + i]) throw DomainError("QPCoefficients: A must be symmetric");
        auto finite = [](double v) { return std::isfinite(v); };
        if (!std::all_of(s_.A.begin(), s_.A.end(), finite) || !std::all_of(s_.Sigma0.begin(), s_.Sigma0.end(), finite) ||
            !std::all_of(s_.Sigma1.begin(), s_.Sigma1.end(), finite))
            throw DomainError("QPCoefficients: matrix entries must be finite");
        for (const auto* list : {&s_.F0, &s_.F1, &s_.G})
            for (const auto& t : *list)
                if (!std::isfinite(t.amplitude) || !std::isfinite(t.phase))
                    throw DomainError("QPCoefficients: trig term with non-finite amplitude or phase");
        for (const auto& t : s_.F0)
            if (t.component >= d) throw DomainError("QPCoefficients: F0 term component out of range");
    }

    Spec s_;
};

namespace detail {
inline void require_finite(std::span<const double> x, const char* what) {
    for (double v : x)
        if (!std::isfinite(v)) throw DomainError(what);
}
}  // namespace detail

/// b~(t1, t2, x).
inline std::vector<double> eval_drift(const QPCoefficients& c, HullArg t1, HullArg t2, std::span<const double> x) {
    detail::require_finite(x, "eval_drift: non-finite state");
    if (x.size() != c.dim()) throw DomainError("eval_drift: dimension mismatch");
    std::vector<double> f0(c.dim()), out(c.dim());
    double f1 = 0.0, g = 0.0;
    c.frame(c.phase(t1, t2), f0, f1, g);
    c.drift_from_frame({f0, f1, g}, x, out);
    return out;
}

/// sigma~(t1, t2, x) as a d x d row-major matrix.
inline std::vector<double> eval_diffusion(const QPCoefficients& c, HullArg t1, HullArg t2,
                                          std::span<const double> x) {
    detail::require_finite(x, "eval_diffusion: non-finite state");
    if (x.size() != c.dim()) throw DomainError("eval_diffusion: dimension mismatch");
    std::vector<double> f0(c.dim()), out(c.dim() * c.dim());
    double f1 = 0.0, g = 0.0;
    c.frame(c.phase(t1, t2), f0, f1, g);
    c.diffusion_from_frame({f0, f1, g}, x, out);
    return out;
}

namespace detail {
inline double norm2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}
}  // namespace detail

// ---------------------------------------------------------------------------------------
// Monte-Carlo audits of the dissipativity and regularity conditions.

struct DissipativityWitness {
    double t1 = 0.0, t2 = 0.0;
    std::vector<double> x, y;
};

struct DissipativityReport {
    double alpha_hat = std::numeric_limits<double>::infinity();
    double declared_alpha = 0.0;
    DissipativityWitness worst;
    bool passed = false;
};

/// alpha_hat = min over samples of -<x-y, b~(t1,t2,x) - b~(t1,t2,y)> / |x-y|^2.
inline DissipativityReport check_dissipativity(const QPCoefficients& c, std::size_t n_samples, double box_radius,
                                               std::uint64_t rng_seed) {
    if (!(box_radius > 0.0)) throw DomainError("check_dissipativity: box_radius must be positive");
    if (n_samples < 1) throw DomainError("check_dissipativity: n_samples must be >= 1");
    const std::size_t d = c.dim();
    std::mt19937_64 rng(rng_seed);
    std::uniform_real_distribution<double> u1(0.0, c.tau1()), u2(0.0, c.tau2()), ux(-box_radius, box_radius);
    DissipativityReport rep;
    rep.declared_alpha = c.declared().alpha;
    std::vector<double> x(d), y(d), diff(d), db(d);
    for (std::size_t n = 0; n < n_samples; ++n) {
        const double t1 = u1(rng), t2 = u2(rng);
        for (std::size_t i = 0; i < d; ++i) {
            x[i] = ux(rng);
            y[i] = ux(rng);
        }
        double sq = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            diff[i] = x[i] - y[i];
            sq += diff[i] * diff[i];
        }
        if (sq == 0.0) continue;
        c.drift_difference(c.phase(t1, t2), x, y, db);
        double inner = 0.0;
        for (std::size_t i = 0; i < d; ++i) inner += diff[i] * db[i];
        const double ratio = -inner / sq;
        if (ratio < rep.alpha_hat) {
            rep.alpha_hat = ratio;
            rep.worst = {t1, t2, x, y};
        }
    }
    rep.passed = rep.alpha_hat >= rep.declared_alpha - 1e-6;
    return rep;
}

struct RegularityReport {
    double beta_hat = 0.0;
    double M_hat = 0.0;
    double gamma_hat = 1.0;
};

/// beta_hat: max sampled ||sigma~(x) - sigma~(y)||_F / |x - y|.
/// M_hat: max sampled |b~(t,s,0)| + ||sigma~(t,s,0)||_F.
/// gamma_hat: log-log slope of the worst coefficient change against a time increment delta.
inline RegularityReport check_lipschitz_and_bounds(const QPCoefficients& c, std::size_t n_samples, double box_radius,
                                                   std::uint64_t rng_seed) {
    if (!(box_radius > 0.0)) throw DomainError("check_lipschitz_and_bounds: box_radius must be positive");
    if (n_samples < 1) throw DomainError("check_lipschitz_and_bounds: n_samples must be >= 1");
    const std::size_t d = c.dim();
    std::mt19937_64 rng(rng_seed);
    std::uniform_real_distribution<double> u1(0.0, c.tau1()), u2(0.0, c.tau2()), ux(-box_radius, box_radius);
    RegularityReport rep;
    std::vector<double> x(d), y(d), zero(d, 0.0), diff(d * d);

    constexpr int kScales = 7;
    std::array<double, kScales> deltas{};
    std::array<double, kScales> worst_change{};
    for (int k = 0; k < kScales; ++k) deltas[k] = std::pow(10.0, -4.0 + 0.5 * k);

    for (std::size_t n = 0; n < n_samples; ++n) {
        const double t1 = u1(rng), t2 = u2(rng);
        for (std::size_t i = 0; i < d; ++i) {
            x[i] = ux(rng);
            y[i] = ux(rng);
        }
        const auto sx = eval_diffusion(c, t1, t2, x);
        const auto sy = eval_diffusion(c, t1, t2, y);
        for (std::size_t i = 0; i < d * d; ++i) diff[i] = sx[i] - sy[i];
        std::vector<double> dxy(d);
        for (std::size_t i = 0; i < d; ++i) dxy[i] = x[i] - y[i];
        const double dist = detail::norm2(dxy);
        if (dist > 0.0) rep.beta_hat = std::max(rep.beta_hat, detail::norm2(diff) / dist);

        const double m = detail::norm2(eval_drift(c, t1, t2, zero)) + detail::norm2(eval_diffusion(c, t1, t2, zero));
        rep.M_hat = std::max(rep.M_hat, m);

        const auto b0 = eval_drift(c, t1, t2, x);
        for (int k = 0; k < kScales; ++k) {
            const auto b1 = eval_drift(c, t1 + deltas[k], t2 + deltas[k], x);
            const auto s1 = eval_diffusion(c, t1 + deltas[k], t2 + deltas[k], x);
            std::vector<double> db(d), ds(d * d);
            for (std::size_t i = 0; i < d; ++i) db[i] = b1[i] - b0[i];
            for (std::size_t i = 0; i < d * d; ++i) ds[i] = s1[i] - sx[i];
            worst_change[k] = std::max(worst_change[k], detail::norm2(db) + detail::norm2(ds));
        }
    }

    std::vector<double> lx, ly;
    for (int k = 0; k < kScales; ++k) {
        if (worst_change[k] > 0.0) {
            lx.push_back(std::log(deltas[k]));
            ly.push_back(std::log(worst_change[k]));
        }
    }
    // Time-independent coefficients are trivially Lipschitz in time.
    rep.gamma_hat = lx.size() >= 2 ? stats::linear_fit(lx, ly).slope : 1.0;
    return rep;
}

/// Second-moment bound for p = 2: E|X_t^{s,xi}|^2 <= |xi|^2 + K / lambda with
/// K = M^2 / (2 eps) + (beta^2 / eps + 1) M^2 and lambda = 2 alpha - beta^2 - 3 eps, minimised over eps.
inline double second_moment_bound(double alpha, double beta, double M, double xi_sq = 0.0) {
    const double room = 2.0 * alpha - beta * beta;
    if (!(room > 0.0)) throw DomainError("second_moment_bound: requires 2 alpha > beta^2");
    auto constant = [&](double eps) {
        const double K = M * M / (2.0 * eps) + (beta * beta / eps + 1.0) * M * M;
        return K / (room - 3.0 * eps);
    };
    const double hi = room / 3.0;
    const auto best = boost::math::tools::brent_find_minima(constant, hi * 1e-6, hi * (1.0 - 1e-6), 40);
    return xi_sq + best.second;
}

}  // namespace qpsde

#pragma once

// Exact Gaussian laws of phi(t) and phi~(t, s) for dX = (S(t) - A X) dt + sigma(t) dW.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>

#include "qpsde/coefficients.hpp"
#include "qpsde/errors.hpp"
#include "qpsde/measures.hpp"
#include "qpsde/stats.hpp"

namespace qpsde {

struct OUSpec {
    std::size_t dim = 1;
    double tau1 = 1.0;
    double tau2 = std::numbers::sqrt2;
    std::vector<double> A;       // d x d, symmetric positive definite
    std::vector<TrigTerm> S;     // forcing, component-tagged
    std::vector<double> Sigma0;  // d x d
    std::vector<double> Sigma1;  // d x d, scaled by G(t1, t2); may be empty
    std::vector<TrigTerm> G;
};

/// OUSpec of a coefficient pair whose diffusion is state independent.
inline OUSpec ou_spec_from(const QPCoefficients& c) {
    if (c.has_state_coupling() && (!c.spec().F1.empty() || !c.spec().G.empty()))
        throw DomainError("ou_spec_from: coefficients are not of Ornstein-Uhlenbeck type");
    const auto& s = c.spec();
    return {s.dim, s.tau1, s.tau2, s.A, s.F0, s.Sigma0, s.Sigma1, s.G};
}

struct GaussianLaw {
    std::vector<double> mean;
    std::vector<double> cov;  // d x d row-major

    std::size_t dim() const noexcept { return mean.size(); }

    /// Density for d = 1.
    double pdf(double x) const {
        const double v = cov.at(0);
        return std::exp(-0.5 * (x - mean[0]) * (x - mean[0]) / v) / std::sqrt(2.0 * std::numbers::pi * v);
    }

    double cdf(double x) const { return stats::normal_cdf((x - mean.at(0)) / std::sqrt(cov.at(0))); }
};

namespace detail {

struct Eig {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
};

inline Eig eigen_of(const OUSpec& sp) {
    const auto d = static_cast<Eigen::Index>(sp.dim);
    if (sp.A.size() != sp.dim * sp.dim) throw DomainError("OUSpec: A must be d x d");
    Eigen::MatrixXd A(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) A(i, j) = sp.A[static_cast<std::size_t>(i * d + j)];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    if (es.info() != Eigen::Success) throw NumericError("OUSpec: eigendecomposition failed");
    if (es.eigenvalues().minCoeff() <= 0.0) throw DomainError("OUSpec: A must be positive definite");
    return {es.eigenvalues(), es.eigenvectors()};
}

inline double trig_value(const TrigTerm& t, double theta1, double theta2) {
    return t.amplitude * std::sin(2.0 * std::numbers::pi * (t.n1 * theta1 + t.n2 * theta2) + t.phase);
}

/// Shortest period among the forcing and diffusion harmonics, capped by tau1 and tau2.
inline double shortest_period(const OUSpec& sp) {
    double p = std::min(sp.tau1, sp.tau2);
    for (const auto* list : {&sp.S, &sp.G})
        for (const auto& t : *list) {
            const double f = std::abs(t.n1) / sp.tau1 + std::abs(t.n2) / sp.tau2;
            if (f > 0.0) p = std::min(p, 1.0 / f);
        }
    return p;
}

/// S~(t1, t2) as a d-vector.
inline Eigen::VectorXd forcing(const OUSpec& sp, double t1, double t2) {
    const double th1 = reduce_mod(t1, sp.tau1) / sp.tau1, th2 = reduce_mod(t2, sp.tau2) / sp.tau2;
    Eigen::VectorXd f = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sp.dim));
    for (const auto& t : sp.S) f(static_cast<Eigen::Index>(t.component)) += trig_value(t, th1, th2);
    return f;
}

/// sigma~(t1, t2) as a d x d matrix.
inline Eigen::MatrixXd diffusion(const OUSpec& sp, double t1, double t2) {
    const auto d = static_cast<Eigen::Index>(sp.dim);
    const double th1 = reduce_mod(t1, sp.tau1) / sp.tau1, th2 = reduce_mod(t2, sp.tau2) / sp.tau2;
    double g = 0.0;
    for (const auto& t : sp.G) g += trig_value(t, th1, th2);
    Eigen::MatrixXd s(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) {
            const auto k = static_cast<std::size_t>(i * d + j);
            s(i, j) = sp.Sigma0[k] + (sp.Sigma1.empty() ? 0.0 : g * sp.Sigma1[k]);
        }
    return s;
}

inline bool constant_diffusion(const OUSpec& sp) {
    return sp.G.empty() || std::all_of(sp.Sigma1.begin(), sp.Sigma1.end(), [](double v) { return v == 0.0; });
}

/// Composite 10-point Gauss-Legendre over [-L, 0] in the lag variable u, integrand(u).
template <class F>
void integrate_lag(const OUSpec& sp, const Eig& eig, int refine, F&& integrand) {
    const double lmin = eig.values.minCoeff();
    const double L = 40.0 / lmin;
    const double h = shortest_period(sp) / (8.0 * refine);
    const auto panels = static_cast<std::int64_t>(std::ceil(L / h));
    using GL = boost::math::quadrature::gauss<double, 10>;
    const auto& x = GL::abscissa();
    const auto& w = GL::weights();
    for (std::int64_t p = 0; p < panels; ++p) {
        const double hi = -static_cast<double>(p) * h, lo = hi - h, mid = 0.5 * (lo + hi), half = 0.5 * h;
        for (std::size_t k = 0; k < x.size(); ++k) {
            if (x[k] == 0.0) {
                integrand(mid, w[k] * half);
            } else {
                integrand(mid + half * x[k], w[k] * half);
                integrand(mid - half * x[k], w[k] * half);
            }
        }
    }
}

inline std::vector<double> to_std(const Eigen::MatrixXd& m) {
    std::vector<double> out(static_cast<std::size_t>(m.size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) out[static_cast<std::size_t>(i * m.cols() + j)] = m(i, j);
    return out;
}

/// Law from a lag integrand: forcing(u) and diffusion(u) give the hull values at lag u <= 0.
template <class Force, class Diff>
GaussianLaw law_by_quadrature(const OUSpec& sp, int refine, Force&& force_at, Diff&& diff_at) {
    const Eig eig = eigen_of(sp);
    const auto d = static_cast<Eigen::Index>(sp.dim);
    const Eigen::MatrixXd& V = eig.vectors;
    Eigen::VectorXd mean_eig = Eigen::VectorXd::Zero(d);
    Eigen::MatrixXd cov_eig = Eigen::MatrixXd::Zero(d, d);
    const bool const_sigma = constant_diffusion(sp);
    integrate_lag(sp, eig, refine, [&](double u, double wt) {
        const Eigen::VectorXd decay = (eig.values * u).array().exp();
        mean_eig += wt * decay.cwiseProduct(V.transpose() * force_at(u));
        if (!const_sigma) {
            const Eigen::MatrixXd s = V.transpose() * diff_at(u);
            cov_eig += wt * decay.asDiagonal() * (s * s.transpose()) * decay.asDiagonal();
        }
    });
    if (const_sigma) {
        const Eigen::MatrixXd s = V.transpose() * diffusion(sp, 0.0, 0.0);
        const Eigen::MatrixXd q = s * s.transpose();
        for (Eigen::Index i = 0; i < d; ++i)
            for (Eigen::Index j = 0; j < d; ++j) cov_eig(i, j) = q(i, j) / (eig.values(i) + eig.values(j));
    }
    Eigen::MatrixXd cov = V * cov_eig * V.transpose();
    cov = 0.5 * (cov + cov.transpose());
    GaussianLaw law{std::vector<double>(static_cast<std::size_t>(d)), to_std(cov)};
    const Eigen::VectorXd mean = V * mean_eig;
    for (Eigen::Index i = 0; i < d; ++i) law.mean[static_cast<std::size_t>(i)] = mean(i);
    for (double v : law.mean)
        if (!std::isfinite(v)) throw NumericError("ou law: quadrature produced a non-finite mean");
    for (double v : law.cov)
        if (!std::isfinite(v)) throw NumericError("ou law: quadrature produced a non-finite covariance");
    return law;
}

}  // namespace detail

/// Law of phi~(t, s): N(int_{-inf}^0 e^{rA} S~(r+t, r+s) dr, int_{-inf}^0 e^{rA} (sigma~ sigma~^T)(r+t, r+s) e^{rA} dr).
inline GaussianLaw ou_rho_tilde(const OUSpec& sp, double t, double s, int refine = 1) {
    return detail::law_by_quadrature(
        sp, refine, [&](double u) { return detail::forcing(sp, u + t, u + s); },
        [&](double u) { return detail::diffusion(sp, u + t, u + s); });
}

/// Law of phi(t): N(int_{-inf}^t e^{-(t-r)A} S(r) dr, ...), integrated in the original variable r = t + u.
inline GaussianLaw ou_rho(const OUSpec& sp, double t, int refine = 1) {
    return detail::law_by_quadrature(
        sp, refine,
        [&](double u) {
            const double r = t + u;
            return detail::forcing(sp, r, r);
        },
        [&](double u) {
            const double r = t + u;
            return detail::diffusion(sp, r, r);
        });
}

/// Mean of phi~(t, s) from the exact antiderivative
/// int_{-inf}^0 e^{lambda u} sin(omega u + c) du = (lambda sin c - omega cos c) / (lambda^2 + omega^2).
inline std::vector<double> ou_mean_closed_form(const OUSpec& sp, double t, double s) {
    const detail::Eig eig = detail::eigen_of(sp);
    const auto d = static_cast<Eigen::Index>(sp.dim);
    const Eigen::MatrixXd& V = eig.vectors;
    Eigen::VectorXd m_eig = Eigen::VectorXd::Zero(d);
    for (const auto& term : sp.S) {
        const double omega = 2.0 * std::numbers::pi * (term.n1 / sp.tau1 + term.n2 / sp.tau2);
        const double c = 2.0 * std::numbers::pi *
                             (term.n1 * (reduce_mod(t, sp.tau1) / sp.tau1) + term.n2 * (reduce_mod(s, sp.tau2) / sp.tau2)) +
                         term.phase;
        for (Eigen::Index i = 0; i < d; ++i) {
            const double lam = eig.values(i);
            const double integral = (lam * std::sin(c) - omega * std::cos(c)) / (lam * lam + omega * omega);
            m_eig(i) += V(static_cast<Eigen::Index>(term.component), i) * term.amplitude * integral;
        }
    }
    const Eigen::VectorXd m = V * m_eig;
    std::vector<double> out(sp.dim);
    for (Eigen::Index i = 0; i < d; ++i) out[static_cast<std::size_t>(i)] = m(i);
    return out;
}

/// Stationary covariance for constant sigma: solves A C + C A = sigma sigma^T.
inline std::vector<double> ou_stationary_covariance(const OUSpec& sp) {
    if (!detail::constant_diffusion(sp)) throw DomainError("ou_stationary_covariance: diffusion is time dependent");
    return ou_rho_tilde(sp, 0.0, 0.0).cov;
}

struct GaussianFit {
    std::vector<double> mean_z;
    double cov_rel_err = 0.0;
    double ks_stat = 0.0;     // d = 1 only
    double ks_critical = 0.0; // 1% level
    bool degenerate = false;  // law covariance singular while the samples spread
    bool passed = false;      // all |z| < 4, cov_rel_err < 5%, KS below the 1% critical value
};

inline GaussianFit gaussian_gof(const EmpiricalMeasure& mu, const GaussianLaw& law) {
    const std::size_t d = mu.dim();
    if (law.dim() != d || law.cov.size() != d * d) throw DomainError("gaussian_gof: dimension mismatch");
    GaussianFit fit;
    const double n = static_cast<double>(mu.size());
    const auto m = mu.mean();
    const auto c = mu.covariance();
    double spread = 0.0;
    for (std::size_t j = 0; j < d; ++j) spread += c[j * d + j];
    fit.mean_z.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
        const double v = law.cov[j * d + j];
        if (!(v > 1e-300)) {
            fit.degenerate = fit.degenerate || spread > 0.0;
            fit.mean_z[j] = m[j] == law.mean[j] ? 0.0 : std::numeric_limits<double>::infinity();
        } else {
            fit.mean_z[j] = (m[j] - law.mean[j]) / std::sqrt(v / n);
        }
    }
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < d * d; ++k) {
        num += (c[k] - law.cov[k]) * (c[k] - law.cov[k]);
        den += law.cov[k] * law.cov[k];
    }
    fit.cov_rel_err = den > 0.0 ? std::sqrt(num / den) : (num > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    fit.ks_critical = stats::ks_critical(mu.size(), 0.01);
    if (d == 1 && law.cov[0] > 1e-300) fit.ks_stat = stats::ks_statistic(mu.samples(), [&](double x) { return law.cdf(x); });
    bool z_ok = std::all_of(fit.mean_z.begin(), fit.mean_z.end(), [](double z) { return std::abs(z) < 4.0; });
    fit.passed = !fit.degenerate && z_ok && fit.cov_rel_err < 0.05 && (d != 1 || fit.ks_stat < fit.ks_critical);
    return fit;
}

/// Exact samples from a Gaussian law (for oracle self-checks), driven by the hashed generator.
inline EmpiricalMeasure sample_gaussian(const GaussianLaw& law, std::size_t n, std::uint64_t seed) {
    const auto d = static_cast<Eigen::Index>(law.dim());
    Eigen::MatrixXd C(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) C(i, j) = law.cov[static_cast<std::size_t>(i * d + j)];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
    const Eigen::MatrixXd root = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    std::vector<double> s(n * law.dim());
    Eigen::VectorXd z(d);
    for (std::size_t i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < d; ++j)
            z(j) = hashed_normal(seed, static_cast<std::int64_t>(i), static_cast<std::uint32_t>(j));
        const Eigen::VectorXd x = root * z;
        for (Eigen::Index j = 0; j < d; ++j)
            s[i * law.dim() + static_cast<std::size_t>(j)] = law.mean[static_cast<std::size_t>(j)] + x(j);
    }
    return EmpiricalMeasure(law.dim(), std::move(s));
}

/// (s1, s2)-averages of the law mean and of E|X|^2 over an n x n grid of the period square.
struct MuBarMoments {
    std::vector<double> mean;
    double second_moment = 0.0;
};

inline MuBarMoments ou_mu_bar_moments(const OUSpec& sp, std::size_t n = 64) {
    MuBarMoments out{std::vector<double>(sp.dim, 0.0), 0.0};
    double trace = 0.0;
    const auto cov = ou_rho_tilde(sp, 0.0, 0.0).cov;
    const bool constant = detail::constant_diffusion(sp);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double s1 = static_cast<double>(i) * sp.tau1 / static_cast<double>(n);
            const double s2 = static_cast<double>(j) * sp.tau2 / static_cast<double>(n);
            const auto m = ou_mean_closed_form(sp, s1, s2);
            const auto c = constant ? cov : ou_rho_tilde(sp, s1, s2).cov;
            double msq = 0.0, tr = 0.0;
            for (std::size_t k = 0; k < sp.dim; ++k) {
                out.mean[k] += m[k];
                msq += m[k] * m[k];
                tr += c[k * sp.dim + k];
            }
            out.second_moment += msq;
            trace += tr;
        }
    const double cells = static_cast<double>(n * n);
    for (double& v : out.mean) v /= cells;
    out.second_moment = (out.second_moment + trace) / cells;
    return out;
}

}  // namespace qpsde

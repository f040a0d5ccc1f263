#pragma once

// 1D Fokker-Planck solver for dq/dt = -(b q)' + (D q)'' / 2 with D = sigma^2.
//
// Finite volumes with Scharfetter-Gummel (Chang-Cooper type) face fluxes
//   J_{j+1/2} = (C / dx) [B(-w) q_j - B(w) q_{j+1}],  A = b - D'/2,  C = D/2,  w = A dx / C,
// B(w) = w / (e^w - 1), zero flux at both ends, theta-scheme in time with a tridiagonal solve.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qpsde/coefficients.hpp"
#include "qpsde/errors.hpp"
#include "qpsde/format.hpp"
#include "qpsde/measures.hpp"
#include "qpsde/ou_analytic.hpp"

namespace qpsde {

class DensityGrid {
public:
    DensityGrid(double x_lo, double x_hi, std::size_t n_cells, double time = 0.0)
        : x_lo_(x_lo), x_hi_(x_hi), values_(n_cells, 0.0), time_(time) {
        if (!(x_hi > x_lo) || !std::isfinite(x_lo) || !std::isfinite(x_hi))
            throw DomainError("DensityGrid: need finite x_lo < x_hi");
        if (n_cells < 16) throw DomainError("DensityGrid: at least 16 cells");
    }

    double x_lo() const noexcept { return x_lo_; }
    double x_hi() const noexcept { return x_hi_; }
    std::size_t n_cells() const noexcept { return values_.size(); }
    double dx() const noexcept { return (x_hi_ - x_lo_) / static_cast<double>(values_.size()); }
    double center(std::size_t j) const noexcept { return x_lo_ + (static_cast<double>(j) + 0.5) * dx(); }
    double face(std::size_t j) const noexcept { return x_lo_ + static_cast<double>(j) * dx(); }
    double time() const noexcept { return time_; }
    void set_time(double t) noexcept { time_ = t; }

    std::vector<double>& values() noexcept { return values_; }
    const std::vector<double>& values() const noexcept { return values_; }
    double operator[](std::size_t j) const noexcept { return values_[j]; }

    double mass() const noexcept {
        double s = 0.0;
        for (double v : values_) s += v;
        return s * dx();
    }

    /// Cell averages of a density given through its CDF, so the mass is exact up to tails.
    template <class Cdf>
    static DensityGrid from_cdf(double x_lo, double x_hi, std::size_t n_cells, double time, Cdf&& cdf) {
        DensityGrid g(x_lo, x_hi, n_cells, time);
        for (std::size_t j = 0; j < n_cells; ++j) g.values_[j] = (cdf(g.face(j + 1)) - cdf(g.face(j))) / g.dx();
        g.normalize();
        return g;
    }

    /// Rescales to unit mass.
    void normalize() {
        const double m = mass();
        if (!(m > 0.0)) throw NumericError("DensityGrid: zero mass");
        for (double& v : values_) v /= m;
    }

private:
    double x_lo_, x_hi_;
    std::vector<double> values_;
    double time_;
};

/// Cell averages of the Gaussian law (d = 1).
inline DensityGrid gaussian_density(const GaussianLaw& law, double x_lo, double x_hi, std::size_t n_cells,
                                    double time) {
    if (law.dim() != 1) throw DomainError("gaussian_density: d = 1 only");
    return DensityGrid::from_cdf(x_lo, x_hi, n_cells, time, [&](double x) { return law.cdf(x); });
}

/// Mollified point mass at x0 with standard deviation two cell widths.
inline DensityGrid narrow_gaussian(double x_lo, double x_hi, std::size_t n_cells, double time, double x0) {
    const double width = 2.0 * (x_hi - x_lo) / static_cast<double>(n_cells);
    return gaussian_density(GaussianLaw{{x0}, {width * width}}, x_lo, x_hi, n_cells, time);
}

struct FPOperatorSpec {
    std::function<double(double, double)> drift;         // b(t, x)
    std::function<double(double, double)> diffusion_sq;  // D(t, x) = sigma(t, x)^2
    double d_min = 1e-12;                                 // ellipticity floor
};

/// Diagonal restriction of a d = 1 coefficient pair, optionally time-shifted: b^r(t, x) = b(t + r, x).
inline FPOperatorSpec fp_operator_from(const QPCoefficients& c, double r = 0.0) {
    if (c.dim() != 1) throw DomainError("fp_operator_from: d = 1 only");
    FPOperatorSpec op;
    op.drift = [&c, r](double t, double x) {
        const double tt = t + r;
        return eval_drift(c, tt, tt, std::span<const double>(&x, 1))[0];
    };
    op.diffusion_sq = [&c, r](double t, double x) {
        const double tt = t + r;
        const double s = eval_diffusion(c, tt, tt, std::span<const double>(&x, 1))[0];
        return s * s;
    };
    return op;
}

struct FPSolveOptions {
    double theta = 1.0;                 // 1 = backward Euler, 0.5 = Crank-Nicolson
    double step_mass_tol = 1e-12;       // per-step mass change reported against this
    double abort_mass_drift = 1e-8;     // cumulative drift that aborts the solve
};

struct FPSolveStats {
    std::size_t steps = 0;
    double max_step_mass_drift = 0.0;
    double total_mass_drift = 0.0;
    double min_value = std::numeric_limits<double>::infinity();
    double boundary_mass = 0.0;  // mass in the two outermost cells at the end
    bool step_mass_ok = true;
};

namespace detail {
inline double bernoulli(double w) {
    if (std::abs(w) < 1e-8) return 1.0 - 0.5 * w;
    return w / std::expm1(w);
}

/// Tridiagonal generator L at time t: (L q)_j = lower_j q_{j-1} + diag_j q_j + upper_j q_{j+1}.
struct Tridiag {
    std::vector<double> lower, diag, upper;
};

inline Tridiag assemble(const FPOperatorSpec& op, const DensityGrid& g, double t) {
    const std::size_t n = g.n_cells();
    const double dx = g.dx();
    Tridiag L{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
    std::vector<double> Dc(n);
    for (std::size_t j = 0; j < n; ++j) {
        Dc[j] = op.diffusion_sq(t, g.center(j));
        if (!(Dc[j] > op.d_min)) throw DomainError("fp_solve: diffusion below the ellipticity floor");
    }
    for (std::size_t j = 0; j + 1 < n; ++j) {
        const double xf = g.face(j + 1);
        const double Df = op.diffusion_sq(t, xf);
        if (!(Df > op.d_min)) throw DomainError("fp_solve: diffusion below the ellipticity floor");
        const double A = op.drift(t, xf) - 0.5 * (Dc[j + 1] - Dc[j]) / dx;
        const double C = 0.5 * Df;
        const double w = A * dx / C;
        const double left = C / (dx * dx) * bernoulli(-w);  // coefficient of q_j in J / dx
        const double right = C / (dx * dx) * bernoulli(w);  // coefficient of q_{j+1} in J / dx
        // J leaves cell j and enters cell j + 1.
        L.diag[j] -= left;
        L.upper[j] += right;
        L.lower[j + 1] += left;
        L.diag[j + 1] -= right;
    }
    return L;
}

inline void thomas(std::vector<double> a, std::vector<double> b, std::vector<double> c, std::vector<double>& d) {
    const std::size_t n = b.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double m = a[i] / b[i - 1];
        b[i] -= m * c[i - 1];
        d[i] -= m * d[i - 1];
    }
    d[n - 1] /= b[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) d[i] = (d[i] - c[i] * d[i + 1]) / b[i];
}
}  // namespace detail

/// Advances q0 from t0 to t1 with steps of at most dt_pde.
inline DensityGrid fp_solve(const FPOperatorSpec& op, const DensityGrid& q0, double t0, double t1, double dt_pde,
                            const FPSolveOptions& opt, FPSolveStats* stats_out = nullptr) {
    if (!(t1 >= t0)) throw DomainError("fp_solve: t1 must be >= t0");
    if (!(dt_pde > 0.0)) throw DomainError("fp_solve: dt_pde must be positive");
    if (!(opt.theta >= 0.0 && opt.theta <= 1.0)) throw DomainError("fp_solve: theta must lie in [0, 1]");
    FPSolveStats st;
    if (t1 == t0) {
        if (stats_out) *stats_out = st;
        return q0;
    }
    const auto steps = static_cast<std::size_t>(std::ceil((t1 - t0) / dt_pde - 1e-9));
    const double h = (t1 - t0) / static_cast<double>(steps);
    DensityGrid q = q0;
    const std::size_t n = q.n_cells();
    const double m0 = q0.mass();
    double prev_mass = m0;
    detail::Tridiag L_now = detail::assemble(op, q, t0);
    std::vector<double> rhs(n), a(n), b(n), c(n);
    for (std::size_t k = 0; k < steps; ++k) {
        const double tb = t0 + static_cast<double>(k + 1) * h;
        const detail::Tridiag L_next = detail::assemble(op, q, tb);
        if (k == 0) {
            double worst = 0.0;
            for (double v : L_now.diag) worst = std::max(worst, -v);
            if ((1.0 - opt.theta) * h * worst > 1.0)
                throw DomainError("fp_solve: explicit part violates the positivity bound (1 - theta) dt max|L_jj| <= 1");
        }
        auto& v = q.values();
        for (std::size_t j = 0; j < n; ++j) {
            double Lq = L_now.diag[j] * v[j];
            if (j > 0) Lq += L_now.lower[j] * v[j - 1];
            if (j + 1 < n) Lq += L_now.upper[j] * v[j + 1];
            rhs[j] = v[j] + (1.0 - opt.theta) * h * Lq;
            a[j] = -opt.theta * h * L_next.lower[j];
            b[j] = 1.0 - opt.theta * h * L_next.diag[j];
            c[j] = -opt.theta * h * L_next.upper[j];
        }
        detail::thomas(a, b, c, rhs);
        v = rhs;
        L_now = L_next;
        const double m = q.mass();
        const double step_drift = std::abs(m - prev_mass);
        st.max_step_mass_drift = std::max(st.max_step_mass_drift, step_drift);
        if (step_drift > opt.step_mass_tol) st.step_mass_ok = false;
        prev_mass = m;
        if (std::abs(m - m0) > opt.abort_mass_drift)
            throw NumericError("fp_solve: mass drift " + format_double(m - m0) + " after step " + std::to_string(k + 1) +
                               " exceeds " + format_double(opt.abort_mass_drift));
        for (double x : v) st.min_value = std::min(st.min_value, x);
        ++st.steps;
    }
    st.total_mass_drift = std::abs(q.mass() - m0);
    st.boundary_mass = (q[0] + q[n - 1]) * q.dx();
    q.set_time(t1);
    if (stats_out) *stats_out = st;
    return q;
}

inline DensityGrid fp_solve(const FPOperatorSpec& op, const DensityGrid& q0, double t0, double t1, double dt_pde) {
    return fp_solve(op, q0, t0, t1, dt_pde, FPSolveOptions{});
}

inline double l1_distance(const DensityGrid& a, const DensityGrid& b) {
    if (a.n_cells() != b.n_cells() || a.x_lo() != b.x_lo() || a.x_hi() != b.x_hi())
        throw DomainError("l1_distance: grids differ");
    double s = 0.0;
    for (std::size_t j = 0; j < a.n_cells(); ++j) s += std::abs(a[j] - b[j]);
    return s * a.dx();
}

/// L1 distance of a grid density to an analytic density given by its CDF (cell masses compared).
template <class Cdf>
double l1_to_cdf(const DensityGrid& q, Cdf&& cdf) {
    double s = 0.0;
    for (std::size_t j = 0; j < q.n_cells(); ++j) s += std::abs(q[j] * q.dx() - (cdf(q.face(j + 1)) - cdf(q.face(j))));
    return s + cdf(q.x_lo()) + (1.0 - cdf(q.x_hi()));
}

/// Mass of the piecewise-constant density on [lo, hi].
inline double mass_between(const DensityGrid& q, double lo, double hi) {
    double s = 0.0;
    for (std::size_t j = 0; j < q.n_cells(); ++j) {
        const double a = std::max(lo, q.face(j)), b = std::min(hi, q.face(j + 1));
        if (b > a) s += q[j] * (b - a);
    }
    return s;
}

/// Histogram of samples with Scott's bin width 3.49 s n^{-1/3}, compared to q by bin masses.
inline double histogram_l1(const DensityGrid& q, const EmpiricalMeasure& mu) {
    if (mu.dim() != 1) throw DomainError("histogram_l1: d = 1 only");
    std::vector<double> x = mu.samples();
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    const double sd = std::sqrt(stats::variance(x));
    const double width = 3.49 * sd * std::cbrt(1.0 / n);
    if (!(width > 0.0)) throw DomainError("histogram_l1: degenerate sample");
    const double lo = x.front(), hi = x.back();
    const auto bins = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((hi - lo) / width)));
    std::vector<double> counts(bins, 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        auto b = static_cast<std::size_t>((x[i] - lo) / width);
        counts[std::min(b, bins - 1)] += mu.weight(i);
    }
    double l1 = 0.0, covered = 0.0;
    for (std::size_t b = 0; b < bins; ++b) {
        const double a = lo + static_cast<double>(b) * width;
        const double e = b + 1 == bins ? std::max(hi, a + width) : a + width;
        const double m = mass_between(q, a, e);
        covered += m;
        l1 += std::abs(m - counts[b]);
    }
    return l1 + std::max(0.0, q.mass() - covered);
}

struct ResidualReport {
    std::vector<double> times;
    std::vector<double> l1;
    double max_l1 = 0.0;
    double max_step_mass_drift = 0.0;
    double min_value = std::numeric_limits<double>::infinity();
};

/// Solves forward from q0 across `times` (ascending, times[0] >= q0.time()) and compares with
/// the Monte-Carlo measures mc[i] of rho_{times[i]} by histogram L1.
inline ResidualReport fp_entrance_residual(const FPOperatorSpec& op, const DensityGrid& q0,
                                           const std::vector<double>& times, const std::vector<EmpiricalMeasure>& mc,
                                           double dt_pde, const FPSolveOptions& opt = {}) {
    if (times.size() != mc.size()) throw DomainError("fp_entrance_residual: one measure per time node");
    ResidualReport rep;
    DensityGrid q = q0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        FPSolveStats st;
        q = fp_solve(op, q, q.time(), times[i], dt_pde, opt, &st);
        rep.max_step_mass_drift = std::max(rep.max_step_mass_drift, st.max_step_mass_drift);
        rep.min_value = std::min(rep.min_value, *std::min_element(q.values().begin(), q.values().end()));
        const double r = histogram_l1(q, mc[i]);
        rep.times.push_back(times[i]);
        rep.l1.push_back(r);
        rep.max_l1 = std::max(rep.max_l1, r);
    }
    return rep;
}

/// Domain [min mean - 8 sd, max mean + 8 sd] over the analytic laws at the given times.
inline std::pair<double, double> ou_domain(const OUSpec& sp, const std::vector<double>& times) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (double t : times) {
        const auto law = ou_rho(sp, t);
        const double sd = std::sqrt(law.cov[0]);
        lo = std::min(lo, law.mean[0] - 8.0 * sd);
        hi = std::max(hi, law.mean[0] + 8.0 * sd);
    }
    return {lo, hi};
}

/// Largest L1 gap between q^r(t) (operator shifted by r) and q(t + r) at the listed t.
inline double fp_shift_relation(const QPCoefficients& c, const DensityGrid& q0, double t0, double r,
                                const std::vector<double>& times, double dt_pde, const FPSolveOptions& opt = {}) {
    const auto base = fp_operator_from(c, 0.0);
    const auto shifted = fp_operator_from(c, r);
    DensityGrid qb = q0, qs = q0;
    qb.set_time(t0 + r);
    qs.set_time(t0);
    double worst = 0.0;
    for (double t : times) {
        qs = fp_solve(shifted, qs, qs.time(), t, dt_pde, opt);
        qb = fp_solve(base, qb, qb.time(), t + r, dt_pde, opt);
        worst = std::max(worst, l1_distance(qs, qb));
    }
    return worst;
}

inline void write_density_csv(std::ostream& os, const DensityGrid& q) {
    os << "# time=" << format_double(q.time()) << '\n' << "x,q\n";
    for (std::size_t j = 0; j < q.n_cells(); ++j) os << format_double(q.center(j)) << ',' << format_double(q[j]) << '\n';
}

inline nlohmann::json residual_json(const ResidualReport& r) {
    nlohmann::json j;
    j["times"] = r.times;
    j["l1"] = r.l1;
    j["max_l1"] = r.max_l1;
    j["max_step_mass_drift"] = r.max_step_mass_drift;
    j["min_value"] = r.min_value;
    return j;
}

}  // namespace qpsde

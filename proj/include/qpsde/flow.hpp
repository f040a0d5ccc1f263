#pragma once

// Euler-Maruyama integration of u, u^r and the reparameterised flow K^{r1,r2}.
//
// Hull offsets are carried as HullOffset {base, grid_steps, turns}: the coefficient time
// argument at grid index k is double(k + grid_steps) * dt + base, and `turns` whole periods
// are dropped exactly. This keeps the shift, periodicity and cocycle identities bitwise.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "qpsde/coefficients.hpp"
#include "qpsde/errors.hpp"
#include "qpsde/format.hpp"
#include "qpsde/noise.hpp"
#include "qpsde/stats.hpp"

namespace qpsde {

/// r = double(grid_steps) * dt + base (+ turns whole periods of the slot it is used in).
struct HullOffset {
    double base = 0.0;
    std::int64_t grid_steps = 0;
    std::int64_t turns = 0;

    HullOffset() = default;
    HullOffset(double b, std::int64_t steps = 0, std::int64_t n = 0)  // NOLINT(google-explicit-constructor)
        : base(b), grid_steps(steps), turns(n) {}

    HullArg at(std::int64_t k, double dt) const noexcept {
        return {static_cast<double>(k + grid_steps) * dt + base, turns};
    }
    double value(double dt, double period) const noexcept {
        return static_cast<double>(grid_steps) * dt + base + static_cast<double>(turns) * period;
    }
};

/// (r1, r2) of K^{r1,r2}; both zero gives u.
struct Reparam {
    HullOffset r1;
    HullOffset r2;

    static Reparam diagonal(HullOffset r) { return {r, r}; }
};

enum class Flavor { u, u_r, K };

inline const char* to_string(Flavor f) {
    switch (f) {
        case Flavor::u: return "u";
        case Flavor::u_r: return "u_r";
        case Flavor::K: return "K";
    }
    return "?";
}

struct Trajectory {
    TimeGrid grid{1e-3};
    std::int64_t start_index = 0;
    std::size_t dim = 1;
    std::vector<double> values;  // (n_points x dim) row-major
    Flavor flavor = Flavor::u;
    Reparam reparam;

    std::size_t size() const noexcept { return dim == 0 ? 0 : values.size() / dim; }
    std::int64_t end_index() const noexcept { return start_index + static_cast<std::int64_t>(size()) - 1; }
    std::span<const double> at(std::size_t i) const { return {values.data() + i * dim, dim}; }
    std::span<const double> back() const { return at(size() - 1); }
    std::span<const double> at_index(std::int64_t k) const { return at(static_cast<std::size_t>(k - start_index)); }
};

/// Coefficient frame at one grid step: F0 (d entries), then F1, then G.
inline void compute_frame(const QPCoefficients& c, const Reparam& rp, std::int64_t k, double dt, double* out) {
    const std::size_t d = c.dim();
    const HullPhase ph = c.phase(rp.r1.at(k, dt), rp.r2.at(k, dt));
    c.frame(ph, {out, d}, out[d], out[d + 1]);
}

inline FrameView frame_view(const double* f, std::size_t d) noexcept { return {{f, d}, f[d], f[d + 1]}; }

/// Scratch space for em_step.
struct StepScratch {
    std::vector<double> drift;
    std::vector<double> noise;

    explicit StepScratch(std::size_t d = 1) : drift(d), noise(d) {}
};

/// One Euler-Maruyama step in place: x <- x + b dt + sigma dW. Every integrator funnels through here.
inline void em_step(const QPCoefficients& c, const double* frame, std::span<double> x, std::span<const double> dw,
                    double dt, StepScratch& s) noexcept {
    const std::size_t d = c.dim();
    const FrameView fr = frame_view(frame, d);
    c.drift_from_frame(fr, x, s.drift);
    c.diffusion_times(fr, x, dw, s.noise);
    for (std::size_t i = 0; i < d; ++i) x[i] = x[i] + s.drift[i] * dt + s.noise[i];
}

namespace detail {
inline bool all_finite(std::span<const double> x) noexcept {
    for (double v : x)
        if (!std::isfinite(v)) return false;
    return true;
}

inline void check_range(std::int64_t s_idx, std::int64_t t_idx, std::span<const double> x0, std::size_t d) {
    if (t_idx < s_idx) throw DomainError("integrate: t_idx must be >= s_idx");
    if (x0.size() != d) throw DomainError("integrate: initial condition has wrong dimension");
    if (!all_finite(x0)) throw DomainError("integrate: non-finite initial condition");
}
}  // namespace detail

/// K^{r1,r2} on the grid from s_idx to t_idx, full path.
inline Trajectory integrate_K(const QPCoefficients& c, const NoisePath& w, const Reparam& rp, std::int64_t s_idx,
                              std::int64_t t_idx, std::span<const double> x0) {
    const std::size_t d = c.dim();
    detail::check_range(s_idx, t_idx, x0, d);
    if (w.dim() != d) throw DomainError("integrate: noise dimension does not match coefficients");
    const double dt = w.dt();
    Trajectory tr{w.grid().extended_to(s_idx).extended_to(t_idx), s_idx, d, {}, Flavor::K, rp};
    tr.values.reserve(static_cast<std::size_t>(t_idx - s_idx + 1) * d);
    tr.values.insert(tr.values.end(), x0.begin(), x0.end());
    std::vector<double> x(x0.begin(), x0.end()), dw(d), frame(d + 2);
    StepScratch scratch(d);
    for (std::int64_t k = s_idx; k < t_idx; ++k) {
        compute_frame(c, rp, k, dt, frame.data());
        w.increment(k, dw);
        em_step(c, frame.data(), x, dw, dt, scratch);
        if (!detail::all_finite(x)) throw ExplosionError(k + 1, "integrate: trajectory exploded");
        tr.values.insert(tr.values.end(), x.begin(), x.end());
    }
    return tr;
}

inline Trajectory integrate_K(const QPCoefficients& c, const NoisePath& w, double r1, double r2, std::int64_t s_idx,
                              std::int64_t t_idx, std::span<const double> x0) {
    return integrate_K(c, w, Reparam{r1, r2}, s_idx, t_idx, x0);
}

/// u(t, s, x): K^{0,0}.
inline Trajectory integrate_u(const QPCoefficients& c, const NoisePath& w, std::int64_t s_idx, std::int64_t t_idx,
                              std::span<const double> x0) {
    Trajectory tr = integrate_K(c, w, Reparam{}, s_idx, t_idx, x0);
    tr.flavor = Flavor::u;
    return tr;
}

/// u^r(t, s, x) = u(t + r, s + r, x) on theta_{-r} omega with r = m dt, reported on the unshifted index range.
inline Trajectory integrate_u_r(const QPCoefficients& c, const NoisePath& w, std::int64_t m, std::int64_t s_idx,
                                std::int64_t t_idx, std::span<const double> x0) {
    Trajectory tr = integrate_u(c, w.shifted(-m), s_idx + m, t_idx + m, x0);
    tr.start_index = s_idx;
    tr.flavor = Flavor::u_r;
    tr.reparam = Reparam::diagonal(HullOffset(0.0, m));
    return tr;
}

/// Final state of K^{r1,r2} only; same arithmetic as integrate_K.
inline std::vector<double> propagate_K(const QPCoefficients& c, const NoisePath& w, const Reparam& rp,
                                       std::int64_t s_idx, std::int64_t t_idx, std::span<const double> x0) {
    const std::size_t d = c.dim();
    detail::check_range(s_idx, t_idx, x0, d);
    const double dt = w.dt();
    std::vector<double> x(x0.begin(), x0.end()), dw(d), frame(d + 2);
    StepScratch scratch(d);
    for (std::int64_t k = s_idx; k < t_idx; ++k) {
        compute_frame(c, rp, k, dt, frame.data());
        w.increment(k, dw);
        em_step(c, frame.data(), x, dw, dt, scratch);
        if (!detail::all_finite(x)) throw ExplosionError(k + 1, "integrate: trajectory exploded");
    }
    return x;
}

inline std::vector<double> propagate_u(const QPCoefficients& c, const NoisePath& w, std::int64_t s_idx,
                                       std::int64_t t_idx, std::span<const double> x0) {
    return propagate_K(c, w, Reparam{}, s_idx, t_idx, x0);
}

inline double max_abs_deviation(const Trajectory& a, const Trajectory& b) {
    if (a.values.size() != b.values.size()) throw DomainError("max_abs_deviation: trajectory lengths differ");
    double dev = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) dev = std::max(dev, std::abs(a.values[i] - b.values[i]));
    return dev;
}

/// K^{r1,r2}(t + r, s + r, x, theta_{-r} omega) against K^{r1+r, r2+r}(t, s, x, omega), r = m dt.
inline double check_shift_identity(const QPCoefficients& c, const NoisePath& w, const Reparam& rp, std::int64_t m,
                                   std::int64_t s_idx, std::int64_t t_idx, std::span<const double> x0) {
    const Trajectory lhs = integrate_K(c, w.shifted(-m), rp, s_idx + m, t_idx + m, x0);
    const Reparam moved{{rp.r1.base, rp.r1.grid_steps + m, rp.r1.turns}, {rp.r2.base, rp.r2.grid_steps + m, rp.r2.turns}};
    const Trajectory rhs = integrate_K(c, w, moved, s_idx, t_idx, x0);
    return max_abs_deviation(lhs, rhs);
}

inline double check_shift_identity(const QPCoefficients& c, const NoisePath& w, double r1, double r2, std::int64_t m,
                                   std::int64_t s_idx, std::int64_t t_idx, std::span<const double> x0) {
    return check_shift_identity(c, w, Reparam{r1, r2}, m, s_idx, t_idx, x0);
}

/// Like check_shift_identity, but the left side runs on a noise relabelled by `noise_m`
/// while the coefficients move by `m`. Used to confirm that a wrong shift is detected.
inline double shift_mismatch(const QPCoefficients& c, const NoisePath& w, const Reparam& rp, std::int64_t m,
                             std::int64_t noise_m, std::int64_t s_idx, std::int64_t t_idx,
                             std::span<const double> x0) {
    const Trajectory lhs = integrate_K(c, w.shifted(-noise_m), rp, s_idx + m, t_idx + m, x0);
    const Reparam moved{{rp.r1.base, rp.r1.grid_steps + m, rp.r1.turns}, {rp.r2.base, rp.r2.grid_steps + m, rp.r2.turns}};
    const Trajectory rhs = integrate_K(c, w, moved, s_idx, t_idx, x0);
    return max_abs_deviation(lhs, rhs);
}

struct ContractionFit {
    double slope = std::numeric_limits<double>::quiet_NaN();
    std::size_t points = 0;
};

/// Least-squares slope of log|X_t^{s,x} - X_t^{s,y}| against t over [fit_from_idx, t_idx].
inline ContractionFit contraction_slope(const QPCoefficients& c, const NoisePath& w, std::int64_t s_idx,
                                        std::int64_t t_idx, std::span<const double> x, std::span<const double> y,
                                        std::int64_t fit_from_idx) {
    const Trajectory a = integrate_u(c, w, s_idx, t_idx, x);
    const Trajectory b = integrate_u(c, w, s_idx, t_idx, y);
    std::vector<double> ts, logs;
    for (std::int64_t k = std::max(fit_from_idx, s_idx); k <= t_idx; ++k) {
        const auto xa = a.at_index(k);
        const auto xb = b.at_index(k);
        double sq = 0.0;
        for (std::size_t i = 0; i < c.dim(); ++i) sq += (xa[i] - xb[i]) * (xa[i] - xb[i]);
        if (sq <= 0.0) continue;
        ts.push_back(w.grid().time(k));
        logs.push_back(0.5 * std::log(sq));
    }
    ContractionFit fit;
    fit.points = ts.size();
    if (ts.size() >= 2) fit.slope = stats::linear_fit(ts, logs).slope;
    return fit;
}

/// CSV with a comment header describing flavor and parameters, then columns time, x_1..x_d.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
    os << "# flavor=" << to_string(tr.flavor) << " dt=" << format_double(tr.grid.dt)
       << " start_index=" << tr.start_index << " r1=" << format_double(tr.reparam.r1.base) << "+"
       << tr.reparam.r1.grid_steps << "dt r2=" << format_double(tr.reparam.r2.base) << "+"
       << tr.reparam.r2.grid_steps << "dt\n";
    os << "time";
    for (std::size_t i = 0; i < tr.dim; ++i) os << ",x_" << (i + 1);
    os << '\n';
    for (std::size_t n = 0; n < tr.size(); ++n) {
        os << format_double(tr.grid.time(tr.start_index + static_cast<std::int64_t>(n)));
        for (double v : tr.at(n)) os << ',' << format_double(v);
        os << '\n';
    }
}

}  // namespace qpsde

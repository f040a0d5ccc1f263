#pragma once

// Pull-back construction of the random path phi(t) = lim_{s -> -inf} X_t^{s, x0} and of the
// hull phi~(t, s) = phi^{t,s}(0). Levels start at s_k = t - k H on one fixed noise path.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <ostream>
#include <span>
#include <vector>

#include "qpsde/coefficients.hpp"
#include "qpsde/errors.hpp"
#include "qpsde/flow.hpp"
#include "qpsde/format.hpp"
#include "qpsde/noise.hpp"
#include "qpsde/stats.hpp"

namespace qpsde {

struct PullbackConfig {
    double tol = 1e-6;
    int max_levels = 40;
    std::int64_t level_steps = 0;  // H in grid steps; 0 derives it from the coefficient audit
    double p = 2.0;                // L^p order, used only in the rate formula
    std::vector<double> x0;        // empty means the origin
    double dt = 1e-3;
    unsigned threads = 0;
    std::size_t audit_samples = 4000;
    double audit_box = 10.0;
    std::uint64_t audit_seed = 0;
};

struct PullbackLevel {
    std::int64_t s_idx = 0;
    double s = 0.0;
    std::vector<double> value;
    double gap = std::numeric_limits<double>::quiet_NaN();  // undefined on the first level
};

struct PullbackResult {
    std::vector<double> value;
    std::vector<PullbackLevel> levels;
    bool converged = false;
    double fitted_rate = std::numeric_limits<double>::quiet_NaN();
    double p_norm_order = 2.0;
    std::int64_t level_steps = 0;
};

/// Contraction rate alpha - (p - 1) beta^2 / 2 from the audited constants.
inline double audited_contraction_rate(const QPCoefficients& c, const PullbackConfig& cfg) {
    const auto diss = check_dissipativity(c, cfg.audit_samples, cfg.audit_box, cfg.audit_seed);
    const auto reg = check_lipschitz_and_bounds(c, cfg.audit_samples, cfg.audit_box, cfg.audit_seed + 1);
    return diss.alpha_hat - (cfg.p - 1.0) * reg.beta_hat * reg.beta_hat / 2.0;
}

/// Smallest whole number of grid steps covering ln(10) / rate.
inline std::int64_t level_steps_for_rate(double rate, double dt) {
    if (!(rate > 0.0) || !std::isfinite(rate))
        throw DomainError("pullback: audited contraction rate is not positive; coefficients are not dissipative");
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(std::numbers::ln10 / rate / dt - 1e-9)));
}

inline std::int64_t resolve_level_steps(const QPCoefficients& c, const PullbackConfig& cfg) {
    if (cfg.level_steps > 0) return cfg.level_steps;
    return level_steps_for_rate(audited_contraction_rate(c, cfg), cfg.dt);
}

/// Frames for grid indices [lo, t_idx), stored from t_idx - 1 downward and extended on demand.
class FrameWindow {
public:
    FrameWindow(const QPCoefficients& c, Reparam rp, std::int64_t t_idx, double dt)
        : c_(&c), rp_(rp), t_idx_(t_idx), dt_(dt), stride_(c.dim() + 2) {}

    void ensure(std::int64_t lo) {
        const std::int64_t have = static_cast<std::int64_t>(data_.size() / stride_);
        const std::int64_t need = t_idx_ - lo;
        if (need <= have) return;
        data_.resize(static_cast<std::size_t>(need) * stride_);
        for (std::int64_t j = have; j < need; ++j) compute_frame(*c_, rp_, t_idx_ - 1 - j, dt_, &data_[j * stride_]);
    }

    const double* at(std::int64_t k) const noexcept { return &data_[(t_idx_ - 1 - k) * stride_]; }
    const Reparam& reparam() const noexcept { return rp_; }
    std::int64_t target() const noexcept { return t_idx_; }

private:
    const QPCoefficients* c_;
    Reparam rp_;
    std::int64_t t_idx_;
    double dt_;
    std::size_t stride_;
    std::vector<double> data_;
};

/// Increments for grid indices [lo, t_idx) of one noise path, extended on demand.
class IncrementWindow {
public:
    IncrementWindow(const NoisePath& w, std::int64_t t_idx) : w_(&w), t_idx_(t_idx), d_(w.dim()) {}

    void ensure(std::int64_t lo) {
        const std::int64_t have = static_cast<std::int64_t>(data_.size() / d_);
        const std::int64_t need = t_idx_ - lo;
        if (need <= have) return;
        data_.resize(static_cast<std::size_t>(need) * d_);
        for (std::int64_t j = have; j < need; ++j) w_->increment(t_idx_ - 1 - j, {&data_[j * d_], d_});
    }

    std::span<const double> at(std::int64_t k) const noexcept { return {&data_[(t_idx_ - 1 - k) * d_], d_}; }

private:
    const NoisePath* w_;
    std::int64_t t_idx_;
    std::size_t d_;
    std::vector<double> data_;
};

namespace detail {
inline double distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

inline double fit_level_rate(const std::vector<PullbackLevel>& levels) {
    std::vector<double> s, lg;
    for (const auto& l : levels) {
        if (std::isfinite(l.gap) && l.gap > 0.0) {
            s.push_back(l.s);
            lg.push_back(std::log(l.gap));
        }
    }
    return s.size() >= 2 ? stats::linear_fit(s, lg).slope : std::numeric_limits<double>::quiet_NaN();
}
}  // namespace detail

/// Pull-back of K^{rp} toward target index t_idx on noise w, reusing a frame window.
inline PullbackResult pullback_with_window(const QPCoefficients& c, const NoisePath& w, FrameWindow& frames,
                                           std::span<const double> x0, double tol, int max_levels,
                                           std::int64_t level_steps, double p = 2.0) {
    if (!(tol > 0.0)) throw DomainError("pullback: tol must be positive");
    if (max_levels < 2) throw DomainError("pullback: max_levels must be >= 2");
    if (level_steps < 1) throw DomainError("pullback: level spacing must be at least one grid step");
    const std::size_t d = c.dim();
    if (x0.size() != d || !detail::all_finite(x0)) throw DomainError("pullback: bad initial condition");
    if (w.dim() != d) throw DomainError("pullback: noise dimension does not match coefficients");

    const std::int64_t t_idx = frames.target();
    IncrementWindow noise(w, t_idx);
    PullbackResult res;
    res.p_norm_order = p;
    res.level_steps = level_steps;
    std::vector<double> x(d), prev;
    StepScratch scratch(d);
    for (int level = 1; level <= max_levels; ++level) {
        const std::int64_t s_idx = t_idx - static_cast<std::int64_t>(level) * level_steps;
        frames.ensure(s_idx);
        noise.ensure(s_idx);
        std::copy(x0.begin(), x0.end(), x.begin());
        for (std::int64_t k = s_idx; k < t_idx; ++k) {
            em_step(c, frames.at(k), x, noise.at(k), w.dt(), scratch);
            if (!detail::all_finite(x)) throw ExplosionError(k + 1, "pullback: trajectory exploded");
        }
        PullbackLevel lv{s_idx, w.grid().time(s_idx), x, std::numeric_limits<double>::quiet_NaN()};
        if (level > 1) lv.gap = detail::distance(x, prev);
        res.levels.push_back(lv);
        prev = x;
        if (level > 1 && lv.gap < tol) {
            res.converged = true;
            break;
        }
    }
    res.value = prev;
    res.fitted_rate = detail::fit_level_rate(res.levels);
    return res;
}

inline PullbackResult pullback_K(const QPCoefficients& c, const NoisePath& w, const Reparam& rp, std::int64_t t_idx,
                                 std::span<const double> x0, double tol, int max_levels, std::int64_t level_steps,
                                 double p = 2.0) {
    FrameWindow frames(c, rp, t_idx, w.dt());
    return pullback_with_window(c, w, frames, x0, tol, max_levels, level_steps, p);
}

/// phi(t) at grid index t_idx. Level spacing from cfg (derived from the audit when 0).
inline PullbackResult pullback_phi(const QPCoefficients& c, const NoisePath& w, std::int64_t t_idx,
                                   std::span<const double> x0, double tol, int max_levels,
                                   PullbackConfig cfg = {}) {
    cfg.dt = w.dt();
    return pullback_K(c, w, Reparam{}, t_idx, x0, tol, max_levels, resolve_level_steps(c, cfg), cfg.p);
}

/// phi~(t, s) = phi^{t,s}(0).
inline PullbackResult pullback_phi_tilde(const QPCoefficients& c, const NoisePath& w, HullOffset t_param,
                                         HullOffset s_param, std::span<const double> x0, double tol, int max_levels,
                                         PullbackConfig cfg = {}) {
    cfg.dt = w.dt();
    return pullback_K(c, w, Reparam{t_param, s_param}, 0, x0, tol, max_levels, resolve_level_steps(c, cfg), cfg.p);
}

/// |u(t, s, phi(s)) - phi(t)|.
inline double verify_random_path(const QPCoefficients& c, const NoisePath& w, std::span<const double> phi_s,
                                 std::int64_t s_idx, std::span<const double> phi_t, std::int64_t t_idx) {
    if (t_idx < s_idx) throw DomainError("verify_random_path: t_idx must be >= s_idx");
    const auto x = propagate_u(c, w, s_idx, t_idx, phi_s);
    return detail::distance(x, phi_t);
}

/// Columns s_k, gap_k; the first level has no gap and is written as nan.
inline void write_levels_csv(std::ostream& os, const PullbackResult& r) {
    os << "s_k,gap_k\n";
    for (const auto& l : r.levels) os << format_double(l.s) << ',' << format_double(l.gap) << '\n';
}

}  // namespace qpsde

#pragma once

// The lifted cocycle on [0, tau1) x [0, tau2) x R^d, the lifted measures and the averaged
// invariant measure mu-bar, built both as a parameter-grid double average and as a time average.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "qpsde/coefficients.hpp"
#include "qpsde/errors.hpp"
#include "qpsde/flow.hpp"
#include "qpsde/format.hpp"
#include "qpsde/measures.hpp"
#include "qpsde/noise.hpp"
#include "qpsde/parallel.hpp"
#include "qpsde/pullback.hpp"
#include "qpsde/stats.hpp"

namespace qpsde {

/// (a1, a2, x). The angles are the reductions of double(steps) * dt + base_i, and the unreduced
/// form is kept so that composed lifts reproduce a single lift bitwise.
struct CylinderPoint {
    double a1 = 0.0;
    double a2 = 0.0;
    std::vector<double> x;
    double base1 = 0.0;
    double base2 = 0.0;
    std::int64_t steps = 0;
};

inline CylinderPoint make_cylinder_point(const QPCoefficients& c, double s1, double s2, std::vector<double> x) {
    if (!std::isfinite(s1) || !std::isfinite(s2)) throw DomainError("make_cylinder_point: non-finite angle");
    return {reduce_mod(s1, c.tau1()), reduce_mod(s2, c.tau2()), std::move(x), s1, s2, 0};
}

/// Y~(s) = (s mod tau1, s mod tau2, x) for the grid time s = s_idx dt.
inline CylinderPoint lifted_path_point(const QPCoefficients& c, std::int64_t s_idx, double dt, std::vector<double> x) {
    const double s = static_cast<double>(s_idx) * dt + 0.0;
    return {reduce_mod(s, c.tau1()), reduce_mod(s, c.tau2()), std::move(x), 0.0, 0.0, s_idx};
}

inline Reparam reparam_of(const CylinderPoint& p) {
    return {HullOffset(p.base1, p.steps), HullOffset(p.base2, p.steps)};
}

/// d1 + d2 + |x - y| with the wrap-around metric on each circle.
inline double cylinder_distance(const QPCoefficients& c, const CylinderPoint& p, const CylinderPoint& q) {
    auto circ = [](double a, double b, double tau) {
        const double d = std::abs(a - b);
        return std::min(d, tau - d);
    };
    return circ(p.a1, q.a1, c.tau1()) + circ(p.a2, q.a2, c.tau2()) + detail::euclid(p.x, q.x);
}

/// Phi~(n dt, omega) p: angles advanced, x moved by K^{a1,a2}(n dt, 0, x, omega).
inline CylinderPoint lift_step(const QPCoefficients& c, const NoisePath& w, const CylinderPoint& p,
                               std::int64_t t_steps) {
    if (t_steps < 0) throw DomainError("lift_step: t_steps must be >= 0");
    if (t_steps == 0) return p;
    CylinderPoint q = p;
    q.x = propagate_K(c, w, reparam_of(p), 0, t_steps, p.x);
    q.steps = p.steps + t_steps;
    const double dt = w.dt();
    q.a1 = reduce_mod(static_cast<double>(q.steps) * dt + q.base1, c.tau1());
    q.a2 = reduce_mod(static_cast<double>(q.steps) * dt + q.base2, c.tau2());
    return q;
}

class CylinderMeasure {
public:
    CylinderMeasure() = default;

    explicit CylinderMeasure(std::vector<CylinderPoint> pts, std::string label = {})
        : points_(std::move(pts)), label_(std::move(label)) {
        if (points_.empty()) throw DomainError("CylinderMeasure: empty");
        weights_.assign(points_.size(), 1.0 / static_cast<double>(points_.size()));
        dim_ = points_.front().x.size();
        for (const auto& p : points_)
            if (p.x.size() != dim_ || !detail::all_finite(p.x)) throw DomainError("CylinderMeasure: bad atom");
    }

    std::size_t size() const noexcept { return points_.size(); }
    std::size_t dim() const noexcept { return dim_; }
    const CylinderPoint& at(std::size_t i) const { return points_[i]; }
    const std::vector<CylinderPoint>& points() const noexcept { return points_; }
    const std::vector<double>& weights() const noexcept { return weights_; }
    const std::string& label() const noexcept { return label_; }

    /// Spatial marginal as an EmpiricalMeasure.
    EmpiricalMeasure spatial() const {
        std::vector<double> s;
        s.reserve(size() * dim_);
        for (const auto& p : points_) s.insert(s.end(), p.x.begin(), p.x.end());
        return EmpiricalMeasure(dim_, std::move(s), weights_, MeasureMeta{label_ + ":x"});
    }

    std::vector<double> angles(int slot) const {
        std::vector<double> a(size());
        for (std::size_t i = 0; i < size(); ++i) a[i] = slot == 1 ? points_[i].a1 : points_[i].a2;
        return a;
    }

    /// Atoms i with i mod batches == b.
    CylinderMeasure batch(std::size_t batches, std::size_t b) const {
        std::vector<CylinderPoint> pts;
        for (std::size_t i = b; i < size(); i += batches) pts.push_back(points_[i]);
        return CylinderMeasure(std::move(pts), label_);
    }

private:
    std::vector<CylinderPoint> points_;
    std::vector<double> weights_;
    std::size_t dim_ = 0;
    std::string label_;
};

/// Energy distance under cylinder_distance, exact pairwise sums.
inline double cylinder_energy_distance(const QPCoefficients& c, const CylinderMeasure& mu, const CylinderMeasure& nu) {
    if (mu.dim() != nu.dim()) throw DomainError("cylinder_energy_distance: dimension mismatch");
    return energy_distance_generic(
        mu.size(), nu.size(), mu.weights(), nu.weights(),
        [&](std::size_t i, std::size_t j) { return cylinder_distance(c, mu.at(i), nu.at(j)); },
        [&](std::size_t i, std::size_t j) { return cylinder_distance(c, mu.at(i), mu.at(j)); },
        [&](std::size_t i, std::size_t j) { return cylinder_distance(c, nu.at(i), nu.at(j)); });
}

/// Cylinder energy distance averaged over interleaved batches.
inline stats::MeanWithError batched_cylinder_distance(const QPCoefficients& c, const CylinderMeasure& mu,
                                                      const CylinderMeasure& nu, std::size_t batches,
                                                      unsigned threads = 0) {
    batches = std::clamp<std::size_t>(batches, 1, std::min(mu.size(), nu.size()));
    std::vector<double> per(batches);
    parallel_for(batches, threads, [&](std::size_t b, std::size_t) {
        per[b] = cylinder_energy_distance(c, mu.batch(batches, b), nu.batch(batches, b));
    });
    stats::MeanWithError out;
    out.mean = stats::mean(per);
    if (batches > 1) out.stderr_ = std::sqrt(stats::variance(per) / static_cast<double>(batches));
    return out;
}

enum class NodePlacement { corners, stratified };

/// Discretised mu-bar: equal-weight mixture of delta_{s1} x delta_{s2} x rho~_{s1,s2} over an n1 x n2 grid.
/// `corners` puts every sample of cell (i, j) at (i tau1 / n1, j tau2 / n2); `stratified` draws each
/// sample's (s1, s2) uniformly inside its cell.
inline CylinderMeasure mu_bar_grid(const QPCoefficients& c, std::size_t n1, std::size_t n2, std::size_t n_samples,
                                   std::uint64_t seed0, const PullbackConfig& cfg,
                                   NodePlacement placement = NodePlacement::corners) {
    if (n1 < 1 || n2 < 1) throw DomainError("mu_bar_grid: n1, n2 must be >= 1");
    if (n_samples < 1) throw DomainError("mu_bar_grid: n_samples must be >= 1");
    std::vector<CylinderPoint> pts;
    pts.reserve(n1 * n2 * n_samples);
    if (placement == NodePlacement::corners) {
        for (std::size_t i = 0; i < n1; ++i) {
            for (std::size_t j = 0; j < n2; ++j) {
                const double s1 = static_cast<double>(i) * c.tau1() / static_cast<double>(n1);
                const double s2 = static_cast<double>(j) * c.tau2() / static_cast<double>(n2);
                const std::uint64_t seed = seed0 + (i * n2 + j) * n_samples;
                const auto rho = estimate_rho_tilde(c, s1, s2, n_samples, seed, cfg);
                for (std::size_t k = 0; k < rho.size(); ++k)
                    pts.push_back(make_cylinder_point(c, s1, s2, {rho.at(k).begin(), rho.at(k).end()}));
            }
        }
        return CylinderMeasure(std::move(pts), "mu_bar_grid");
    }
    const std::int64_t steps = resolve_level_steps(c, cfg);
    const auto x0 = detail::initial_point(c, cfg);
    const std::size_t total = n1 * n2 * n_samples;
    pts.resize(total);
    std::vector<std::uint64_t> failed;
    std::mutex failed_mutex;
    parallel_for(total, cfg.threads, [&](std::size_t idx, std::size_t) {
        const std::size_t cell = idx / n_samples, i = cell / n2, j = cell % n2;
        const std::uint64_t seed = seed0 + idx;
        const double u1 = hashed_uniform(seed, 0, 0, Stream::jitter);
        const double u2 = hashed_uniform(seed, 0, 1, Stream::jitter);
        const double s1 = (static_cast<double>(i) + u1) * c.tau1() / static_cast<double>(n1);
        const double s2 = (static_cast<double>(j) + u2) * c.tau2() / static_cast<double>(n2);
        const NoisePath w(seed, c.dim(), TimeGrid(cfg.dt));
        const auto r = pullback_K(c, w, Reparam{s1, s2}, 0, x0, cfg.tol, cfg.max_levels, steps, cfg.p);
        if (!r.converged) {
            std::lock_guard lock(failed_mutex);
            failed.push_back(seed);
        }
        pts[idx] = make_cylinder_point(c, s1, s2, r.value);
    });
    detail::raise_failures(std::move(failed), "mu_bar_grid");
    return CylinderMeasure(std::move(pts), "mu_bar_grid");
}

/// mu-bar_T: equal-weight mixture of delta_{s mod tau1} x delta_{s mod tau2} x rho_s over s_j = j T / n_slices.
inline CylinderMeasure mu_bar_time_average(const QPCoefficients& c, double T, std::size_t n_slices,
                                           std::size_t n_samples, std::uint64_t seed0, const PullbackConfig& cfg) {
    if (!(T > 0.0) || !std::isfinite(T)) throw DomainError("mu_bar_time_average: T must be positive");
    if (n_slices < 1 || n_samples < 1) throw DomainError("mu_bar_time_average: n_slices, n_samples must be >= 1");
    std::vector<CylinderPoint> pts;
    pts.reserve(n_slices * n_samples);
    for (std::size_t j = 0; j < n_slices; ++j) {
        const double s = static_cast<double>(j) * T / static_cast<double>(n_slices);
        const auto rho = estimate_rho(c, s, n_samples, seed0 + j * n_samples, cfg);
        for (std::size_t k = 0; k < rho.size(); ++k)
            pts.push_back(make_cylinder_point(c, s, s, {rho.at(k).begin(), rho.at(k).end()}));
    }
    return CylinderMeasure(std::move(pts), "mu_bar_time_average");
}

/// P~*_t mu: every atom lifted with its own fresh noise.
inline CylinderMeasure lift_measure(const QPCoefficients& c, const CylinderMeasure& mu, std::int64_t t_steps,
                                    std::uint64_t seed0, double dt, unsigned threads = 0) {
    std::vector<CylinderPoint> pts(mu.size());
    parallel_for(mu.size(), threads, [&](std::size_t i, std::size_t) {
        const NoisePath w(seed0 + i, c.dim(), TimeGrid(dt));
        pts[i] = lift_step(c, w, mu.at(i), t_steps);
    });
    return CylinderMeasure(std::move(pts), mu.label() + ":lifted");
}

struct InvarianceReport {
    double dist = 0.0;
    double noise_floor = 0.0;
    double dist_stderr = 0.0;
    double floor_stderr = 0.0;
    bool passed = false;
};

/// dist = D(P~*_t mu, ref_a), floor = D(ref_b, ref_a); ref_a, ref_b are independent rebuilds of mu.
inline InvarianceReport invariance_check(const QPCoefficients& c, const CylinderMeasure& mu,
                                         const CylinderMeasure& ref_a, const CylinderMeasure& ref_b,
                                         std::int64_t t_steps, std::uint64_t seed0, double dt,
                                         std::size_t batches = 16, unsigned threads = 0) {
    const auto pushed = lift_measure(c, mu, t_steps, seed0, dt, threads);
    const auto d = batched_cylinder_distance(c, pushed, ref_a, batches, threads);
    const auto f = batched_cylinder_distance(c, ref_b, ref_a, batches, threads);
    return {d.mean, f.mean, d.stderr_, f.stderr_, d.mean <= 2.0 * f.mean};
}

/// Same check with the two reference rebuilds produced by `rebuild(seed0)`.
inline InvarianceReport invariance_check(const QPCoefficients& c, const CylinderMeasure& mu,
                                         const std::function<CylinderMeasure(std::uint64_t)>& rebuild,
                                         std::int64_t t_steps, std::uint64_t fresh_seed0, double dt,
                                         std::size_t batches = 16, unsigned threads = 0) {
    const auto ref_a = rebuild(fresh_seed0);
    const auto ref_b = rebuild(fresh_seed0 + (std::uint64_t{1} << 40));
    return invariance_check(c, mu, ref_a, ref_b, t_steps, fresh_seed0 + (std::uint64_t{2} << 40), dt, batches,
                            threads);
}

using Observable = std::function<double(const CylinderPoint&)>;

/// (1/N) sum_{k<N} f(Phi~(k dt) p0) along one lifted trajectory of N = T_steps steps,
/// with a batch-means standard error over 20 batches.
inline stats::MeanWithError birkhoff_average(const QPCoefficients& c, const NoisePath& w, const CylinderPoint& p0,
                                             const Observable& f, std::int64_t T_steps, std::size_t batches = 20) {
    if (T_steps <= 0) throw DomainError("birkhoff_average: T must be positive");
    const std::size_t d = c.dim();
    const double dt = w.dt();
    const Reparam rp = reparam_of(p0);
    CylinderPoint p = p0;
    std::vector<double> series(static_cast<std::size_t>(T_steps)), dw(d), frame(d + 2);
    StepScratch scratch(d);
    for (std::int64_t k = 0; k < T_steps; ++k) {
        p.steps = p0.steps + k;
        p.a1 = reduce_mod(static_cast<double>(p.steps) * dt + p.base1, c.tau1());
        p.a2 = reduce_mod(static_cast<double>(p.steps) * dt + p.base2, c.tau2());
        series[static_cast<std::size_t>(k)] = f(p);
        compute_frame(c, rp, k, dt, frame.data());
        w.increment(k, dw);
        em_step(c, frame.data(), p.x, dw, dt, scratch);
        if (!detail::all_finite(p.x)) throw ExplosionError(k + 1, "birkhoff_average: trajectory exploded");
    }
    return stats::batch_means(series, batches);
}

/// Weighted mean of f under mu with the i.i.d. standard error.
inline stats::MeanWithError space_average(const CylinderMeasure& mu, const Observable& f) {
    std::vector<double> v(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) v[i] = f(mu.at(i));
    stats::MeanWithError out;
    double m = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) m += mu.weights()[i] * v[i];
    out.mean = m;
    if (v.size() > 1) out.stderr_ = std::sqrt(stats::variance(v) / static_cast<double>(v.size()));
    return out;
}

/// Columns a1, a2, x_1..x_d, weight.
inline void write_cylinder_csv(std::ostream& os, const CylinderMeasure& mu) {
    os << "a1,a2";
    for (std::size_t j = 0; j < mu.dim(); ++j) os << ",x_" << (j + 1);
    os << ",weight\n";
    for (std::size_t i = 0; i < mu.size(); ++i) {
        const auto& p = mu.at(i);
        os << format_double(p.a1) << ',' << format_double(p.a2);
        for (double v : p.x) os << ',' << format_double(v);
        os << ',' << format_double(mu.weights()[i]) << '\n';
    }
}

}  // namespace qpsde

#pragma once

// Empirical entrance measures rho_t, hull measures rho~_{t,s}, and distances between sample clouds.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <mutex>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qpsde/coefficients.hpp"
#include "qpsde/errors.hpp"
#include "qpsde/flow.hpp"
#include "qpsde/format.hpp"
#include "qpsde/noise.hpp"
#include "qpsde/parallel.hpp"
#include "qpsde/pullback.hpp"
#include "qpsde/stats.hpp"

namespace qpsde {

struct MeasureMeta {
    std::string label;
    double t = std::numeric_limits<double>::quiet_NaN();
    double s = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t seed_lo = 0;
    std::uint64_t seed_hi = 0;
};

class EmpiricalMeasure {
public:
    EmpiricalMeasure() = default;

    /// Equal weights 1/n.
    EmpiricalMeasure(std::size_t dim, std::vector<double> samples, MeasureMeta meta = {})
        : dim_(dim), samples_(std::move(samples)), meta_(std::move(meta)) {
        if (dim_ == 0 || samples_.size() % dim_ != 0) throw DomainError("EmpiricalMeasure: bad sample layout");
        weights_.assign(size(), 1.0 / static_cast<double>(size()));
        validate();
    }

    EmpiricalMeasure(std::size_t dim, std::vector<double> samples, std::vector<double> weights, MeasureMeta meta = {})
        : dim_(dim), samples_(std::move(samples)), weights_(std::move(weights)), meta_(std::move(meta)) {
        if (dim_ == 0 || samples_.size() % dim_ != 0) throw DomainError("EmpiricalMeasure: bad sample layout");
        validate();
    }

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return dim_ == 0 ? 0 : samples_.size() / dim_; }
    std::span<const double> at(std::size_t i) const { return {samples_.data() + i * dim_, dim_}; }
    const std::vector<double>& samples() const noexcept { return samples_; }
    const std::vector<double>& weights() const noexcept { return weights_; }
    double weight(std::size_t i) const noexcept { return weights_[i]; }
    const MeasureMeta& meta() const noexcept { return meta_; }
    MeasureMeta& meta() noexcept { return meta_; }

    bool uniform_weights() const noexcept {
        return std::all_of(weights_.begin(), weights_.end(), [&](double w) { return w == weights_.front(); });
    }

    /// Component j of every sample.
    std::vector<double> component(std::size_t j) const {
        std::vector<double> out(size());
        for (std::size_t i = 0; i < size(); ++i) out[i] = samples_[i * dim_ + j];
        return out;
    }

    std::vector<double> mean() const {
        std::vector<double> m(dim_, 0.0);
        for (std::size_t i = 0; i < size(); ++i)
            for (std::size_t j = 0; j < dim_; ++j) m[j] += weights_[i] * samples_[i * dim_ + j];
        return m;
    }

    /// Weighted covariance with the unbiased factor for equal weights, computed on data shifted by the first atom.
    std::vector<double> covariance() const {
        std::vector<double> m(dim_, 0.0);
        for (std::size_t i = 0; i < size(); ++i)
            for (std::size_t j = 0; j < dim_; ++j) m[j] += weights_[i] * (samples_[i * dim_ + j] - samples_[j]);
        std::vector<double> cov(dim_ * dim_, 0.0);
        for (std::size_t i = 0; i < size(); ++i)
            for (std::size_t a = 0; a < dim_; ++a)
                for (std::size_t b = 0; b < dim_; ++b)
                    cov[a * dim_ + b] += weights_[i] * (samples_[i * dim_ + a] - samples_[a] - m[a]) *
                                         (samples_[i * dim_ + b] - samples_[b] - m[b]);
        const double n = static_cast<double>(size());
        if (n > 1.0)
            for (double& v : cov) v *= n / (n - 1.0);
        return cov;
    }

    /// Weighted mean of |x|^2.
    double second_moment() const {
        double s = 0.0;
        for (std::size_t i = 0; i < size(); ++i) {
            double sq = 0.0;
            for (std::size_t j = 0; j < dim_; ++j) sq += samples_[i * dim_ + j] * samples_[i * dim_ + j];
            s += weights_[i] * sq;
        }
        return s;
    }

private:
    void validate() const {
        if (size() == 0) throw DomainError("EmpiricalMeasure: empty");
        if (weights_.size() != size()) throw DomainError("EmpiricalMeasure: weight count does not match samples");
        double total = 0.0, carry = 0.0;  // Neumaier summation
        for (double w : weights_) {
            if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("EmpiricalMeasure: negative or non-finite weight");
            const double t = total + w;
            carry += std::abs(total) >= w ? (total - t) + w : (w - t) + total;
            total = t;
        }
        if (std::abs(total + carry - 1.0) > 1e-12) throw DomainError("EmpiricalMeasure: weights must sum to 1");
        for (double v : samples_)
            if (!std::isfinite(v)) throw DomainError("EmpiricalMeasure: non-finite sample");
    }

    std::size_t dim_ = 0;
    std::vector<double> samples_;
    std::vector<double> weights_;
    MeasureMeta meta_;
};

namespace detail {
inline std::vector<double> initial_point(const QPCoefficients& c, const PullbackConfig& cfg) {
    if (cfg.x0.empty()) return std::vector<double>(c.dim(), 0.0);
    if (cfg.x0.size() != c.dim()) throw DomainError("pullback config: x0 has wrong dimension");
    return cfg.x0;
}

inline void raise_failures(std::vector<std::uint64_t> failed, const char* what) {
    if (failed.empty()) return;
    std::sort(failed.begin(), failed.end());
    std::string msg = std::string(what) + ": " + std::to_string(failed.size()) + " pull-back(s) did not converge; seeds";
    for (std::size_t i = 0; i < std::min<std::size_t>(failed.size(), 10); ++i) msg += " " + std::to_string(failed[i]);
    if (failed.size() > 10) msg += " ...";
    throw ConvergenceError(std::move(failed), msg);
}
}  // namespace detail

/// Samples of phi~(t, s) over seeds seed0 .. seed0 + n - 1, equal weights.
inline EmpiricalMeasure estimate_rho_tilde(const QPCoefficients& c, HullOffset t_param, HullOffset s_param,
                                           std::size_t n, std::uint64_t seed0, const PullbackConfig& cfg) {
    if (n < 1) throw DomainError("estimate_rho_tilde: n must be >= 1");
    const std::size_t d = c.dim();
    const std::int64_t steps = resolve_level_steps(c, cfg);
    const auto x0 = detail::initial_point(c, cfg);
    const Reparam rp{t_param, s_param};
    std::vector<double> samples(n * d);
    std::vector<std::uint64_t> failed;
    std::mutex failed_mutex;
    const std::size_t workers = worker_count(n, cfg.threads);
    std::vector<FrameWindow> windows(workers, FrameWindow(c, rp, 0, cfg.dt));
    parallel_for(n, cfg.threads, [&](std::size_t i, std::size_t worker) {
        const NoisePath w(seed0 + i, d, TimeGrid(cfg.dt));
        const auto r = pullback_with_window(c, w, windows[worker], x0, cfg.tol, cfg.max_levels, steps, cfg.p);
        if (!r.converged) {
            std::lock_guard lock(failed_mutex);
            failed.push_back(seed0 + i);
        }
        std::copy(r.value.begin(), r.value.end(), samples.begin() + static_cast<std::ptrdiff_t>(i * d));
    });
    detail::raise_failures(std::move(failed), "estimate_rho_tilde");
    MeasureMeta meta{"rho_tilde", t_param.value(cfg.dt, 0.0), s_param.value(cfg.dt, 0.0), seed0, seed0 + n - 1};
    return EmpiricalMeasure(d, std::move(samples), std::move(meta));
}

inline EmpiricalMeasure estimate_rho_tilde(const QPCoefficients& c, double t_param, double s_param, std::size_t n,
                                           std::uint64_t seed0, const PullbackConfig& cfg) {
    return estimate_rho_tilde(c, HullOffset(t_param), HullOffset(s_param), n, seed0, cfg);
}

/// rho_t through the diagonal of the hull: phi~(t, t) has the law of phi(t).
inline EmpiricalMeasure estimate_rho(const QPCoefficients& c, HullOffset t_param, std::size_t n, std::uint64_t seed0,
                                     const PullbackConfig& cfg) {
    auto mu = estimate_rho_tilde(c, t_param, t_param, n, seed0, cfg);
    mu.meta().label = "rho";
    return mu;
}

inline EmpiricalMeasure estimate_rho(const QPCoefficients& c, double t_param, std::size_t n, std::uint64_t seed0,
                                     const PullbackConfig& cfg) {
    return estimate_rho(c, HullOffset(t_param), n, seed0, cfg);
}

/// rho_t at several grid times from one ensemble: phi(t0) by pull-back, then u(t, t0, phi(t0)) = phi(t) on the same noise.
inline std::vector<EmpiricalMeasure> estimate_rho_series(const QPCoefficients& c, std::int64_t t0_idx,
                                                         const std::vector<std::int64_t>& t_indices, std::size_t n,
                                                         std::uint64_t seed0, const PullbackConfig& cfg) {
    if (n < 1) throw DomainError("estimate_rho_series: n must be >= 1");
    if (!std::is_sorted(t_indices.begin(), t_indices.end()) || (!t_indices.empty() && t_indices.front() < t0_idx))
        throw DomainError("estimate_rho_series: times must be sorted and not before t0");
    const std::size_t d = c.dim(), m = t_indices.size();
    const std::int64_t steps = resolve_level_steps(c, cfg);
    const auto x0 = detail::initial_point(c, cfg);
    const std::int64_t t_end = t_indices.empty() ? t0_idx : t_indices.back();
    std::vector<double> forward_frames(static_cast<std::size_t>(t_end - t0_idx) * (d + 2));
    for (std::int64_t k = t0_idx; k < t_end; ++k)
        compute_frame(c, Reparam{}, k, cfg.dt, &forward_frames[static_cast<std::size_t>(k - t0_idx) * (d + 2)]);
    std::vector<std::vector<double>> samples(m, std::vector<double>(n * d));
    std::vector<std::uint64_t> failed;
    std::mutex failed_mutex;
    const std::size_t workers = worker_count(n, cfg.threads);
    std::vector<FrameWindow> windows(workers, FrameWindow(c, Reparam{}, t0_idx, cfg.dt));
    parallel_for(n, cfg.threads, [&](std::size_t i, std::size_t worker) {
        const NoisePath w(seed0 + i, d, TimeGrid(cfg.dt));
        const auto r = pullback_with_window(c, w, windows[worker], x0, cfg.tol, cfg.max_levels, steps, cfg.p);
        if (!r.converged) {
            std::lock_guard lock(failed_mutex);
            failed.push_back(seed0 + i);
        }
        std::vector<double> x = r.value, dw(d);
        StepScratch scratch(d);
        std::int64_t k = t0_idx;
        for (std::size_t j = 0; j < m; ++j) {
            for (; k < t_indices[j]; ++k) {
                w.increment(k, dw);
                em_step(c, &forward_frames[static_cast<std::size_t>(k - t0_idx) * (d + 2)], x, dw, cfg.dt, scratch);
                if (!detail::all_finite(x)) throw ExplosionError(k + 1, "estimate_rho_series: trajectory exploded");
            }
            std::copy(x.begin(), x.end(), samples[j].begin() + static_cast<std::ptrdiff_t>(i * d));
        }
    });
    detail::raise_failures(std::move(failed), "estimate_rho_series");
    std::vector<EmpiricalMeasure> out;
    out.reserve(m);
    for (std::size_t j = 0; j < m; ++j) {
        const double t = TimeGrid(cfg.dt).time(t_indices[j]);
        out.emplace_back(d, std::move(samples[j]), MeasureMeta{"rho", t, t, seed0, seed0 + n - 1});
    }
    return out;
}

/// P*(t, s) mu: every atom evolved by u over [s_idx, t_idx] with its own fresh noise seed.
inline EmpiricalMeasure pushforward(const QPCoefficients& c, const EmpiricalMeasure& mu, std::int64_t s_idx,
                                    std::int64_t t_idx, std::uint64_t seed0, double dt, unsigned threads = 0) {
    if (t_idx < s_idx) throw DomainError("pushforward: t_idx must be >= s_idx");
    if (mu.dim() != c.dim()) throw DomainError("pushforward: dimension mismatch");
    if (t_idx == s_idx) return mu;
    const std::size_t d = c.dim(), n = mu.size();
    std::vector<double> frames(static_cast<std::size_t>(t_idx - s_idx) * (d + 2));
    for (std::int64_t k = s_idx; k < t_idx; ++k)
        compute_frame(c, Reparam{}, k, dt, &frames[static_cast<std::size_t>(k - s_idx) * (d + 2)]);
    std::vector<double> samples(n * d);
    parallel_for(n, threads, [&](std::size_t i, std::size_t) {
        const NoisePath w(seed0 + i, d, TimeGrid(dt));
        std::vector<double> x(mu.at(i).begin(), mu.at(i).end()), dw(d);
        StepScratch scratch(d);
        for (std::int64_t k = s_idx; k < t_idx; ++k) {
            w.increment(k, dw);
            em_step(c, &frames[static_cast<std::size_t>(k - s_idx) * (d + 2)], x, dw, dt, scratch);
            if (!detail::all_finite(x)) throw ExplosionError(k + 1, "pushforward: trajectory exploded");
        }
        std::copy(x.begin(), x.end(), samples.begin() + static_cast<std::ptrdiff_t>(i * d));
    });
    MeasureMeta meta = mu.meta();
    meta.label = "pushforward";
    meta.t = TimeGrid(dt).time(t_idx);
    return EmpiricalMeasure(d, std::move(samples), mu.weights(), std::move(meta));
}

// ---------------------------------------------------------------------------------------
// Distances.

enum class TransportKind { w1_sorted, energy };

inline const char* to_string(TransportKind k) { return k == TransportKind::w1_sorted ? "w1_sorted" : "energy"; }

namespace detail {
inline void check_pair(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
    if (mu.size() == 0 || nu.size() == 0) throw DomainError("transport_distance: empty measure");
    if (mu.dim() != nu.dim()) throw DomainError("transport_distance: dimension mismatch");
}

/// W1 by quantile coupling of two weighted 1D clouds.
inline double w1_quantile(std::vector<std::pair<double, double>> a, std::vector<std::pair<double, double>> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double total = 0.0, ra = a[0].second, rb = b[0].second;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        const double step = std::min(ra, rb);
        total += step * std::abs(a[i].first - b[j].first);
        ra -= step;
        rb -= step;
        if (ra <= 0.0 && ++i < a.size()) ra = a[i].second;
        if (rb <= 0.0 && ++j < b.size()) rb = b[j].second;
    }
    return total;
}

inline double euclid(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

/// sum_ij wa_i wb_j dist(i, j), rows accumulated in index order.
template <class Dist>
double weighted_mean_distance(std::size_t na, std::size_t nb, const std::vector<double>& wa,
                              const std::vector<double>& wb, Dist&& dist) {
    double total = 0.0;
    for (std::size_t i = 0; i < na; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < nb; ++j) row += wb[j] * dist(i, j);
        total += wa[i] * row;
    }
    return total;
}
}  // namespace detail

/// Energy distance 2 E|X - Y| - E|X - X'| - E|Y - Y'| for a metric on atoms, clamped at 0.
template <class DistAB, class DistAA, class DistBB>
double energy_distance_generic(std::size_t na, std::size_t nb, const std::vector<double>& wa,
                               const std::vector<double>& wb, DistAB&& dab, DistAA&& daa, DistBB&& dbb) {
    const double xy = detail::weighted_mean_distance(na, nb, wa, wb, dab);
    const double xx = detail::weighted_mean_distance(na, na, wa, wa, daa);
    const double yy = detail::weighted_mean_distance(nb, nb, wb, wb, dbb);
    return std::max(0.0, 2.0 * xy - xx - yy);
}

inline double transport_distance(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, TransportKind kind) {
    detail::check_pair(mu, nu);
    if (kind == TransportKind::w1_sorted) {
        if (mu.dim() != 1) throw DomainError("transport_distance: w1_sorted requires d = 1");
        if (mu.size() == nu.size() && mu.uniform_weights() && nu.uniform_weights()) {
            auto a = mu.samples();
            auto b = nu.samples();
            std::sort(a.begin(), a.end());
            std::sort(b.begin(), b.end());
            double s = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
            return s / static_cast<double>(a.size());
        }
        std::vector<std::pair<double, double>> a(mu.size()), b(nu.size());
        for (std::size_t i = 0; i < mu.size(); ++i) a[i] = {mu.samples()[i], mu.weight(i)};
        for (std::size_t i = 0; i < nu.size(); ++i) b[i] = {nu.samples()[i], nu.weight(i)};
        return detail::w1_quantile(std::move(a), std::move(b));
    }
    return energy_distance_generic(
        mu.size(), nu.size(), mu.weights(), nu.weights(),
        [&](std::size_t i, std::size_t j) { return detail::euclid(mu.at(i), nu.at(j)); },
        [&](std::size_t i, std::size_t j) { return detail::euclid(mu.at(i), mu.at(j)); },
        [&](std::size_t i, std::size_t j) { return detail::euclid(nu.at(i), nu.at(j)); });
}

namespace detail {
/// mean_{i,j} |a_i - b_j| for sorted a, b with prefix sums of b.
inline double mean_abs_cross_sorted(const std::vector<double>& a, const std::vector<double>& b,
                                    const std::vector<double>& prefix_b) {
    const double total_b = prefix_b.back();
    const double nb = static_cast<double>(b.size());
    double s = 0.0;
    std::size_t cnt = 0;
    for (double x : a) {
        while (cnt < b.size() && b[cnt] < x) ++cnt;
        const double below = prefix_b[cnt];
        const double c = static_cast<double>(cnt);
        s += x * c - below + (total_b - below) - x * (nb - c);
    }
    return s / (static_cast<double>(a.size()) * nb);
}

inline std::vector<double> prefix_sums(const std::vector<double>& v) {
    std::vector<double> p(v.size() + 1, 0.0);
    for (std::size_t i = 0; i < v.size(); ++i) p[i + 1] = p[i] + v[i];
    return p;
}

/// Energy distance of two equal-weight 1D clouds in O(n log n).
inline double energy_1d_sorted(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const auto pa = prefix_sums(a), pb = prefix_sums(b);
    const double xy = mean_abs_cross_sorted(a, b, pb);
    const double xx = mean_abs_cross_sorted(a, a, pa);
    const double yy = mean_abs_cross_sorted(b, b, pb);
    return std::max(0.0, 2.0 * xy - xx - yy);
}
}  // namespace detail

struct PermutationTest {
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t resamples = 0;
    bool indistinguishable = true;  // p_value > level
};

/// Two-sample permutation test on the energy distance of equal-weight clouds.
inline PermutationTest permutation_test(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                        std::size_t resamples = 200, double level = 0.01,
                                        std::uint64_t rng_seed = 0) {
    detail::check_pair(mu, nu);
    const std::size_t na = mu.size(), nb = nu.size(), d = mu.dim();
    std::vector<double> pooled(mu.samples());
    pooled.insert(pooled.end(), nu.samples().begin(), nu.samples().end());
    const std::size_t n = na + nb;

    std::function<double(const std::vector<std::size_t>&)> stat;
    std::vector<float> dist;
    if (d == 1) {
        stat = [&](const std::vector<std::size_t>& idx) {
            std::vector<double> a(na), b(nb);
            for (std::size_t i = 0; i < na; ++i) a[i] = pooled[idx[i]];
            for (std::size_t i = 0; i < nb; ++i) b[i] = pooled[idx[na + i]];
            return detail::energy_1d_sorted(std::move(a), std::move(b));
        };
    } else {
        dist.resize(n * n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                dist[i * n + j] = static_cast<float>(
                    detail::euclid({pooled.data() + i * d, d}, {pooled.data() + j * d, d}));
        stat = [&](const std::vector<std::size_t>& idx) {
            auto mean_block = [&](std::size_t lo1, std::size_t hi1, std::size_t lo2, std::size_t hi2) {
                double s = 0.0;
                for (std::size_t i = lo1; i < hi1; ++i)
                    for (std::size_t j = lo2; j < hi2; ++j) s += dist[idx[i] * n + idx[j]];
                return s / (static_cast<double>(hi1 - lo1) * static_cast<double>(hi2 - lo2));
            };
            return std::max(0.0, 2.0 * mean_block(0, na, na, n) - mean_block(0, na, 0, na) - mean_block(na, n, na, n));
        };
    }

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    PermutationTest out;
    out.statistic = stat(idx);
    out.resamples = resamples;
    std::mt19937_64 rng(rng_seed);
    std::size_t at_least = 0;
    for (std::size_t r = 0; r < resamples; ++r) {
        std::shuffle(idx.begin(), idx.end(), rng);
        if (stat(idx) >= out.statistic) ++at_least;
    }
    out.p_value = (1.0 + static_cast<double>(at_least)) / (1.0 + static_cast<double>(resamples));
    out.indistinguishable = out.p_value > level;
    return out;
}

/// Atoms i with i mod batches == b, equal weights.
inline EmpiricalMeasure batch_of(const EmpiricalMeasure& mu, std::size_t batches, std::size_t b) {
    const std::size_t d = mu.dim();
    std::vector<double> s;
    for (std::size_t i = b; i < mu.size(); i += batches) s.insert(s.end(), mu.at(i).begin(), mu.at(i).end());
    return EmpiricalMeasure(d, std::move(s), mu.meta());
}

/// Distance averaged over interleaved batches: batch b of mu against batch b of nu.
inline stats::MeanWithError batched_distance(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                             TransportKind kind, std::size_t batches) {
    detail::check_pair(mu, nu);
    batches = std::clamp<std::size_t>(batches, 1, std::min(mu.size(), nu.size()));
    std::vector<double> per(batches);
    for (std::size_t b = 0; b < batches; ++b)
        per[b] = transport_distance(batch_of(mu, batches, b), batch_of(nu, batches, b), kind);
    stats::MeanWithError out;
    out.mean = stats::mean(per);
    if (batches > 1) out.stderr_ = std::sqrt(stats::variance(per) / static_cast<double>(batches));
    return out;
}

// ---------------------------------------------------------------------------------------
// I/O: CSV with one sample per row and a trailing weight column, plus a JSON sidecar.

inline void write_measure_csv(std::ostream& os, const EmpiricalMeasure& mu) {
    for (std::size_t j = 0; j < mu.dim(); ++j) os << "x_" << (j + 1) << ',';
    os << "weight\n";
    for (std::size_t i = 0; i < mu.size(); ++i) {
        for (double v : mu.at(i)) os << format_double(v) << ',';
        os << format_double(mu.weight(i)) << '\n';
    }
}

inline nlohmann::json measure_meta_json(const EmpiricalMeasure& mu) {
    const auto& m = mu.meta();
    nlohmann::json j;
    j["label"] = m.label;
    j["t"] = std::isfinite(m.t) ? nlohmann::json(m.t) : nlohmann::json(nullptr);
    j["s"] = std::isfinite(m.s) ? nlohmann::json(m.s) : nlohmann::json(nullptr);
    j["seed_lo"] = m.seed_lo;
    j["seed_hi"] = m.seed_hi;
    j["n"] = mu.size();
    j["dim"] = mu.dim();
    return j;
}

inline EmpiricalMeasure read_measure_csv(std::istream& is, const nlohmann::json& meta_json = {}) {
    std::string line;
    if (!std::getline(is, line)) throw DomainError("read_measure_csv: missing header");
    const auto cols = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',') + 1);
    if (cols < 2) throw DomainError("read_measure_csv: need at least one coordinate and a weight");
    const std::size_t d = cols - 1;
    std::vector<double> samples, weights;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t col = 0;
        while (std::getline(ss, cell, ',')) {
            const double v = std::stod(cell);
            (col < d ? samples : weights).push_back(v);
            ++col;
        }
        if (col != cols) throw DomainError("read_measure_csv: ragged row");
    }
    MeasureMeta meta;
    if (meta_json.is_object()) {
        meta.label = meta_json.value("label", std::string{});
        if (meta_json.contains("t") && meta_json["t"].is_number()) meta.t = meta_json["t"].get<double>();
        if (meta_json.contains("s") && meta_json["s"].is_number()) meta.s = meta_json["s"].get<double>();
        meta.seed_lo = meta_json.value("seed_lo", std::uint64_t{0});
        meta.seed_hi = meta_json.value("seed_hi", std::uint64_t{0});
    }
    return EmpiricalMeasure(d, std::move(samples), std::move(weights), std::move(meta));
}

inline void save_measure(const std::string& csv_path, const EmpiricalMeasure& mu) {
    std::ofstream csv(csv_path);
    if (!csv) throw DomainError("save_measure: cannot open " + csv_path);
    write_measure_csv(csv, mu);
    std::ofstream js(csv_path + ".json");
    js << measure_meta_json(mu).dump(2) << '\n';
}

inline EmpiricalMeasure load_measure(const std::string& csv_path) {
    std::ifstream csv(csv_path);
    if (!csv) throw DomainError("load_measure: cannot open " + csv_path);
    nlohmann::json meta;
    if (std::ifstream js(csv_path + ".json"); js) meta = nlohmann::json::parse(js);
    return read_measure_csv(csv, meta);
}

}  // namespace qpsde

#pragma once

// The nine acceptance criteria for the default O-U experiment, each returning its sub-checks.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "qpsde/coefficients.hpp"
#include "qpsde/cylinder.hpp"
#include "qpsde/flow.hpp"
#include "qpsde/fokker_planck.hpp"
#include "qpsde/io.hpp"
#include "qpsde/measures.hpp"
#include "qpsde/noise.hpp"
#include "qpsde/ou_analytic.hpp"
#include "qpsde/pullback.hpp"

namespace qpsde {

struct AcceptanceOptions {
    QPCoefficients coefficients;
    double dt = 1e-3;
    std::uint64_t seed = 1;
    unsigned threads = 0;
    std::size_t audit_samples = 100000;
    double audit_box = 10.0;
    std::size_t fp_samples = 100000;  // Monte-Carlo ensemble behind the FP residual
    double time_scale = 1.0;          // multiplies every runtime budget
};

struct CriterionResult {
    int id = 0;
    std::string title;
    std::vector<CheckResult> checks;
    double seconds = 0.0;
    double budget = 0.0;

    bool passed() const { return all_passed(checks); }
};

namespace acceptance_detail {

inline std::uint64_t block(const AcceptanceOptions& o, int id) { return o.seed + (std::uint64_t(id) << 36); }

inline PullbackConfig pullback_config(const AcceptanceOptions& o) {
    PullbackConfig cfg;
    cfg.dt = o.dt;
    cfg.threads = o.threads;
    cfg.audit_samples = o.audit_samples;
    cfg.audit_box = o.audit_box;
    return cfg;
}

inline CheckResult check(std::string name, bool passed, double value, double threshold, std::string detail = {}) {
    CheckResult c;
    c.name = std::move(name);
    c.passed = passed;
    c.value = value;
    c.threshold = threshold;
    c.detail = std::move(detail);
    return c;
}

inline std::int64_t steps_of(double t, double dt) { return std::llround(t / dt); }

inline CriterionResult run_timed(int id, std::string title, double budget, const AcceptanceOptions& o,
                                 const std::function<void(std::vector<CheckResult>&)>& body) {
    CriterionResult r;
    r.id = id;
    r.title = std::move(title);
    r.budget = budget * o.time_scale;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body(r.checks);
    } catch (const std::exception& e) {
        r.checks.push_back(check("completed", false, 0.0, 0.0, e.what()));
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.checks.push_back(check("runtime_seconds", r.seconds < r.budget, r.seconds, r.budget));
    return r;
}

}  // namespace acceptance_detail

/// 1. Bitwise pathwise identities: parameter periodicity, shift identity, cocycle.
inline CriterionResult criterion_identities(const AcceptanceOptions& o) {
    using namespace acceptance_detail;
    return run_timed(1, "exact pathwise identities", 30.0, o, [&](std::vector<CheckResult>& out) {
        const auto& c = o.coefficients;
        const std::size_t d = c.dim();
        std::mt19937_64 rng(block(o, 1));
        std::uniform_real_distribution<double> ur1(0.0, c.tau1()), ur2(0.0, c.tau2()), ux(-3.0, 3.0);
        std::uniform_int_distribution<std::int64_t> um(-5000, 5000), un(1, 1500), us(-500, 500);
        constexpr int kCases = 20;
        const std::int64_t len = 1000;

        double periodic_dev = 0.0;
        for (int i = 0; i < kCases; ++i) {
            const NoisePath w(block(o, 1) + i, d, TimeGrid(o.dt));
            const double r1 = ur1(rng), r2 = ur2(rng);
            std::vector<double> x0(d);
            for (auto& v : x0) v = ux(rng);
            const std::int64_t s = us(rng);
            const auto base = integrate_K(c, w, Reparam{r1, r2}, s, s + len, x0);
            const auto p1 = integrate_K(c, w, Reparam{HullOffset(r1, 0, 1), r2}, s, s + len, x0);
            const auto p2 = integrate_K(c, w, Reparam{r1, HullOffset(r2, 0, 1)}, s, s + len, x0);
            periodic_dev = std::max({periodic_dev, max_abs_deviation(base, p1), max_abs_deviation(base, p2)});
        }
        out.push_back(check("periodicity_max_deviation", periodic_dev == 0.0, periodic_dev, 0.0,
                            "K with r1 + tau1 and r2 + tau2 against K, 20 cases"));

        double shift_dev = 0.0;
        for (int i = 0; i < kCases; ++i) {
            const NoisePath w(block(o, 1) + 100 + i, d, TimeGrid(o.dt));
            const double r1 = ur1(rng), r2 = ur2(rng);
            const std::int64_t m = um(rng), s = us(rng);
            std::vector<double> x0(d);
            for (auto& v : x0) v = ux(rng);
            shift_dev = std::max(shift_dev, check_shift_identity(c, w, r1, r2, m, s, s + len, x0));
        }
        out.push_back(check("shift_identity_max_deviation", shift_dev == 0.0, shift_dev, 0.0,
                            "K(t+r, s+r) on theta_{-r} noise against K^{r1+r, r2+r}(t, s), 20 cases"));

        double space_dev = 0.0, angle_ulps = 0.0;
        for (int i = 0; i < kCases; ++i) {
            const NoisePath w(block(o, 1) + 200 + i, d, TimeGrid(o.dt));
            std::vector<double> x(d);
            for (auto& v : x) v = ux(rng);
            const auto p = make_cylinder_point(c, ur1(rng), ur2(rng), x);
            const std::int64_t m = un(rng), n = un(rng);
            const auto direct = lift_step(c, w, p, m + n);
            const auto composed = lift_step(c, shift(w, m), lift_step(c, w, p, m), n);
            for (std::size_t j = 0; j < d; ++j) space_dev = std::max(space_dev, std::abs(direct.x[j] - composed.x[j]));
            auto ulps = [](double a, double b) {
                if (a == b) return 0.0;
                return std::abs(a - b) / std::max(std::nextafter(std::abs(a), INFINITY) - std::abs(a), 1e-300);
            };
            angle_ulps = std::max({angle_ulps, ulps(direct.a1, composed.a1), ulps(direct.a2, composed.a2)});
        }
        out.push_back(check("cocycle_spatial_max_deviation", space_dev == 0.0, space_dev, 0.0,
                            "Phi(m+n, w) against Phi(n, theta_m w) Phi(m, w), 20 cases"));
        out.push_back(check("cocycle_angle_max_ulps", angle_ulps <= 1.0, angle_ulps, 1.0));
    });
}

/// 2. Fitted contraction rate of two solutions on shared noise against alpha - beta^2 / 2.
inline CriterionResult criterion_contraction(const AcceptanceOptions& o) {
    using namespace acceptance_detail;
    return run_timed(2, "contraction rate", 60.0, o, [&](std::vector<CheckResult>& out) {
        const auto& c = o.coefficients;
        const std::size_t d = c.dim();
        const auto diss = check_dissipativity(c, o.audit_samples, o.audit_box, block(o, 2));
        const auto reg = check_lipschitz_and_bounds(c, o.audit_samples, o.audit_box, block(o, 2) + 1);
        const double target = diss.alpha_hat - reg.beta_hat * reg.beta_hat / 2.0;
        const std::int64_t T = steps_of(8.0, o.dt);
        std::vector<double> rates;
        for (int i = 0; i < 20; ++i) {
            const NoisePath w(block(o, 2) + 10 + i, d, TimeGrid(o.dt));
            std::vector<double> x(d, 5.0), y(d, -5.0);
            const auto fit = contraction_slope(c, w, 0, T, x, y, 0);
            rates.push_back(-fit.slope);
        }
        const double mean_rate = stats::mean(rates);
        const double rel = std::abs(mean_rate - target) / target;
        auto ck = check("mean_fitted_rate_relative_error", rel < 0.1, rel, 0.1,
                        "mean rate " + format_double(mean_rate) + " against " + format_double(target));
        ck.extra["rates"] = rates;
        ck.extra["target"] = target;
        out.push_back(ck);
    });
}

/// 3. Geometric decay of pull-back gaps with the ln 10 level schedule and independence from x0.
inline CriterionResult criterion_pullback(const AcceptanceOptions& o) {
    using namespace acceptance_detail;
    return run_timed(3, "pull-back convergence", 60.0, o, [&](std::vector<CheckResult>& out) {
        const auto& c = o.coefficients;
        const std::size_t d = c.dim();
        const auto cfg = pullback_config(o);
        const std::int64_t H = resolve_level_steps(c, cfg);
        const std::vector<std::int64_t> targets{0, steps_of(0.61, o.dt), steps_of(3.3, o.dt)};

        double worst_factor = INFINITY;
        bool all_converged = true;
        for (int i = 0; i < 10; ++i) {
            const NoisePath w(block(o, 3) + i, d, TimeGrid(o.dt));
            const std::vector<double> x0(d, 10.0);
            const auto r = pullback_K(c, w, Reparam{}, targets[i % targets.size()], x0, cfg.tol, cfg.max_levels, H);
            all_converged = all_converged && r.converged;
            for (std::size_t k = 2; k < r.levels.size(); ++k)
                worst_factor = std::min(worst_factor, r.levels[k - 1].gap / r.levels[k].gap);
        }
        out.push_back(check("all_converged", all_converged, all_converged ? 1.0 : 0.0, 1.0));
        out.push_back(check("min_gap_factor_per_level", worst_factor >= 5.0, worst_factor, 5.0,
                            "H = " + std::to_string(H) + " steps, x0 = 10, 10 paths"));

        double spread = 0.0;
        for (int i = 0; i < 3; ++i) {
            const NoisePath w(block(o, 3) + 100 + i, d, TimeGrid(o.dt));
            std::vector<std::vector<double>> limits;
            for (int j = 0; j < 10; ++j) {
                const std::vector<double> x0(d, -10.0 + 20.0 * j / 9.0);
                limits.push_back(pullback_K(c, w, Reparam{}, targets[i], x0, cfg.tol, cfg.max_levels, H).value);
            }
            for (const auto& a : limits)
                for (const auto& b : limits) spread = std::max(spread, detail::distance(a, b));
        }
        out.push_back(check("limit_spread_over_initial_points", spread <= 2e-6, spread, 2e-6,
                            "10 initial points in [-10, 10], 3 paths"));
    });
}

/// 4. Pull-back samples of rho_t against the O-U Gaussian law at five times.
inline CriterionResult criterion_ou_law(const AcceptanceOptions& o) {
    using namespace acceptance_detail;
    return run_timed(4, "O-U law of rho_t", 300.0, o, [&](std::vector<CheckResult>& out) {
        const auto& c = o.coefficients;
        const auto sp = ou_spec_from(c);
        const auto cfg = pullback_config(o);
        const std::vector<double> times{0.0, 0.37, 1.1, 2.45, 4.0};
        std::vector<std::int64_t> idx;
        for (double t : times) idx.push_back(steps_of(t, o.dt));
        const std::size_t n = 10000;
        const auto series = estimate_rho_series(c, idx.front(), idx, n, block(o, 4), cfg);
        for (std::size_t i = 0; i < times.size(); ++i) {
            const double t = TimeGrid(o.dt).time(idx[i]);
            const auto fit = gaussian_gof(series[i], ou_rho(sp, t));
            double zmax = 0.0;
            for (double z : fit.mean_z) zmax = std::max(zmax, std::abs(z));
            const std::string tag = "t=" + format_double(t);
            out.push_back(check("mean_abs_z " + tag, zmax < 4.0, zmax, 4.0));
            out.push_back(check("cov_rel_err " + tag, fit.cov_rel_err < 0.05, fit.cov_rel_err, 0.05));
            if (c.dim() == 1)
                out.push_back(check("ks_stat " + tag, fit.ks_stat < fit.ks_critical, fit.ks_stat, fit.ks_critical));
        }
    });
}

/// 5. Entrance property: P*(t, s) rho_s against an independent estimate of rho_t.
inline CriterionResult criterion_entrance(const AcceptanceOptions& o) {
    using namespace acceptance_detail;
    return run_timed(5, "entrance property", 300.0, o, [&](std::vector<CheckResult>& out) {
        const auto& c = o.coefficients;
        const auto cfg = pullback_config(o);
        std::mt19937_64 rng(block(o, 5));
        std::uniform_real_distribution<double> us(-2.0, 2.0), ulen(0.1, 2.0);
        const std::size_t n = 4000, R = 8;
        for (int i = 0; i < 5; ++i) {
            const std::int64_t s_idx = steps_of(us(rng), o.dt);
            const std::int64_t t_idx = s_idx + steps_of(ulen(rng), o.dt);
            const std::uint64_t base = block(o, 5) + std::uint64_t(i) * 4 * n;
            const auto rho_s = estimate_rho(c, HullOffset(0.0, s_idx), n, base, cfg);
            const auto pushed = pushforward(c, rho_s, s_idx, t_idx, base + n, o.dt, o.threads);
            const auto rho_t_a = estimate_rho(c, HullOffset(0.0, t_idx), n, base + 2 * n, cfg);
            const auto rho_t_b = estimate_rho(c, HullOffset(0.0, t_idx), n, base + 3 * n, cfg);
            const auto kind = c.dim() == 1 ? TransportKind::w1_sorted : TransportKind::energy;
            const auto dist = batched_distance(pushed, rho_t_a, kind, R);
            const auto floor = batched_distance(rho_t_b, rho_t_a, kind, R);
            const std::string tag = "s=" + format_double(TimeGrid(o.dt).time(s_idx)) +
                                    " t=" + format_double(TimeGrid(o.dt).time(t_idx));
            auto ck = check("distance_over_floor " + tag, dist.mean <= 2.0 * floor.mean, dist.mean / floor.mean, 2.0,
                            "distance " + format_double(dist.mean) + ", floor " + format_double(floor.mean));
            ck.extra["distance_stderr"] = dist.stderr_;
            ck.extra["floor_stderr"] = floor.stderr_;
            out.push_back(ck);
        }
    });
}

/// 6. Separate periodicity of rho~_{t,s} in each argument.
inline CriterionResult criterion_quasi_periodicity(const AcceptanceOptions& o) {
    using namespace acceptance_detail;
    return run_timed(6, "quasi-periodicity of rho~", 180.0, o, [&](std::vector<CheckResult>& out) {
        const auto& c = o.coefficients;
        const auto cfg = pullback_config(o);
        const std::size_t n = 2000;
        const double t = 0.3, s = 0.8;
        const std::uint64_t seed = block(o, 6);
        const auto ref = estimate_rho_tilde(c, t, s, n, seed, cfg);
        const auto shared1 = estimate_rho_tilde(c, HullOffset(t, 0, 1), HullOffset(s), n, seed, cfg);
        const auto shared2 = estimate_rho_tilde(c, HullOffset(t), HullOffset(s, 0, 1), n, seed, cfg);
        auto identical = [](const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
            double dev = 0.0;
            for (std::size_t i = 0; i < a.samples().size(); ++i) dev = std::max(dev, std::abs(a.samples()[i] - b.samples()[i]));
            return dev;
        };
        const double dev1 = identical(ref, shared1), dev2 = identical(ref, shared2);
        out.push_back(check("shared_seed_tau1_max_deviation", dev1 == 0.0, dev1, 0.0));
        out.push_back(check("shared_seed_tau2_max_deviation", dev2 == 0.0, dev2, 0.0));

        const auto moved1 = estimate_rho_tilde(c, t + c.tau1(), s, n, seed + n, cfg);
        const auto moved2 = estimate_rho_tilde(c, t, s + c.tau2(), n, seed + 2 * n, cfg);
        const auto p1 = permutation_test(ref, moved1, 200, 0.01, seed + 7);
        const auto p2 = permutation_test(ref, moved2, 200, 0.01, seed + 8);
        out.push_back(check("disjoint_seed_tau1_p_value", p1.indistinguishable, p1.p_value, 0.01,
                            "energy statistic " + format_double(p1.statistic)));
        out.push_back(check("disjoint_seed_tau2_p_value", p2.indistinguishable, p2.p_value, 0.01,
                            "energy statistic " + format_double(p2.statistic)));

        const auto other = estimate_rho_tilde(c, t + 0.5 * c.tau1(), s, n, seed + 3 * n, cfg);
        const auto p3 = permutation_test(ref, other, 200, 0.01, seed + 9);
        out.push_back(check("half_period_shift_detected_p_value", !p3.indistinguishable, p3.p_value, 0.01,
                            "control: a half-period shift must be distinguishable"));
    });
}

/// 7. Averaged invariant measure: grid against time average, invariance, Birkhoff averages.
inline CriterionResult criterion_invariant_measure(const AcceptanceOptions& o) {
    using namespace acceptance_detail;
    return run_timed(7, "invariant measure mu-bar", 600.0, o, [&](std::vector<CheckResult>& out) {
        const auto& c = o.coefficients;
        const auto cfg = pullback_config(o);
        const std::size_t n1 = 8, n2 = 8, per = 500, R = 16;
        const std::size_t total = n1 * n2 * per;
        const std::uint64_t seed = block(o, 7);
        const auto grid_a = mu_bar_grid(c, n1, n2, per, seed, cfg);
        const auto grid_b = mu_bar_grid(c, n1, n2, per, seed + total, cfg);
        const auto grid_c = mu_bar_grid(c, n1, n2, per, seed + 2 * total, cfg);
        const auto time_avg = mu_bar_time_average(c, 50.0, n1 * n2, per, seed + 3 * total, cfg);

        const auto d_ta = batched_cylinder_distance(c, time_avg, grid_a, R, o.threads);
        const auto floor = batched_cylinder_distance(c, grid_b, grid_a, R, o.threads);
        auto ck = check("grid_vs_time_average_over_floor", d_ta.mean <= 2.0 * floor.mean, d_ta.mean / floor.mean, 2.0,
                        "distance " + format_double(d_ta.mean) + ", floor " + format_double(floor.mean));
        ck.extra["distance_stderr"] = d_ta.stderr_;
        ck.extra["floor_stderr"] = floor.stderr_;
        out.push_back(ck);

        for (double t : {0.25, 1.0, std::numbers::e}) {
            const auto rep = invariance_check(c, grid_a, grid_b, grid_c, steps_of(t, o.dt), seed + 4 * total + 1,
                                              o.dt, R, o.threads);
            auto ik = check("invariance_over_floor t=" + format_double(t), rep.passed, rep.dist / rep.noise_floor, 2.0,
                            "distance " + format_double(rep.dist) + ", floor " + format_double(rep.noise_floor));
            out.push_back(ik);
        }

        const NoisePath w(seed + 5 * total, c.dim(), TimeGrid(o.dt));
        const auto p0 = make_cylinder_point(c, 0.0, 0.0, std::vector<double>(c.dim(), 0.0));
        const std::int64_t T = steps_of(200.0, o.dt);
        const double tau1 = c.tau1();
        const std::vector<std::pair<std::string, Observable>> observables{
            {"x", [](const CylinderPoint& p) { return p.x[0]; }},
            {"x^2", [](const CylinderPoint& p) { return p.x[0] * p.x[0]; }},
            {"sin(2 pi a1 / tau1)",
             [tau1](const CylinderPoint& p) { return std::sin(2.0 * std::numbers::pi * p.a1 / tau1); }}};
        for (const auto& [name, f] : observables) {
            const auto time_mean = birkhoff_average(c, w, p0, f, T);
            const auto space_mean = space_average(grid_a, f);
            const double se = std::hypot(time_mean.stderr_, space_mean.stderr_);
            const double z = std::abs(time_mean.mean - space_mean.mean) / se;
            out.push_back(check("birkhoff_z " + name, z <= 3.0, z, 3.0,
                                "time " + format_double(time_mean.mean) + ", space " + format_double(space_mean.mean)));
        }
    });
}

/// 8. Fokker-Planck correspondence for d = 1.
inline CriterionResult criterion_fokker_planck(const AcceptanceOptions& o) {
    using namespace acceptance_detail;
    return run_timed(8, "Fokker-Planck correspondence", 120.0, o, [&](std::vector<CheckResult>& out) {
        const auto& c = o.coefficients;
        if (c.dim() != 1) throw DomainError("Fokker-Planck criterion needs d = 1");
        const auto sp = ou_spec_from(c);
        const auto cfg = pullback_config(o);
        std::vector<double> times;
        std::vector<std::int64_t> idx;
        for (int i = 1; i <= 8; ++i) {
            idx.push_back(steps_of(0.25 * i, o.dt));
            times.push_back(TimeGrid(o.dt).time(idx.back()));
        }
        std::vector<double> all = times;
        all.push_back(0.0);
        const auto [lo, hi] = ou_domain(sp, all);
        const auto q0 = gaussian_density(ou_rho(sp, 0.0), lo, hi, 400, 0.0);
        const auto mc = estimate_rho_series(c, 0, idx, o.fp_samples, block(o, 8), cfg);
        const auto op = fp_operator_from(c);
        const auto rep = fp_entrance_residual(op, q0, times, mc, 1e-3);
        auto ck = check("max_residual_l1", rep.max_l1 < 0.03, rep.max_l1, 0.03,
                        "histogram L1 over t in (0, 2], n = " + std::to_string(o.fp_samples));
        ck.extra = residual_json(rep);
        out.push_back(ck);
        out.push_back(check("max_step_mass_drift", rep.max_step_mass_drift < 1e-12, rep.max_step_mass_drift, 1e-12));
        out.push_back(check("min_density", rep.min_value >= 0.0, rep.min_value, 0.0));
        const double shift = fp_shift_relation(c, q0, 0.0, 0.37, {0.5, 1.0, 2.0}, 1e-3);
        out.push_back(check("shift_relation_l1", shift < 1e-6, shift, 1e-6, "r = 0.37"));
    });
}

/// The default spec with the drift sign flipped: A -> -A.
inline QPCoefficients anti_dissipative_variant(const QPCoefficients& c) {
    auto spec = c.spec();
    for (auto& v : spec.A) v = -v;
    spec.declared.alpha = 1.0;
    return QPCoefficients(spec);
}

/// 9. Condition audits on the default spec and on its anti-dissipative variant.
inline CriterionResult criterion_audits(const AcceptanceOptions& o) {
    using namespace acceptance_detail;
    return run_timed(9, "condition audits", 30.0, o, [&](std::vector<CheckResult>& out) {
        const auto& c = o.coefficients;
        const auto diss = check_dissipativity(c, o.audit_samples, o.audit_box, block(o, 9));
        const auto reg = check_lipschitz_and_bounds(c, o.audit_samples, o.audit_box, block(o, 9) + 1);
        const double alpha = c.declared().alpha;
        out.push_back(check("alpha_hat", diss.alpha_hat >= alpha - 1e-6 && diss.alpha_hat <= alpha, diss.alpha_hat,
                            alpha - 1e-6, "required in [alpha - 1e-6, alpha]"));
        out.push_back(check("beta_hat", reg.beta_hat == c.declared().beta, reg.beta_hat, c.declared().beta));
        out.push_back(check("M_hat", reg.M_hat <= c.declared().M, reg.M_hat, c.declared().M));

        const auto bad = anti_dissipative_variant(c);
        const auto first = check_dissipativity(bad, o.audit_samples, o.audit_box, block(o, 9) + 2);
        const auto again = check_dissipativity(bad, o.audit_samples, o.audit_box, block(o, 9) + 2);
        const bool reproducible = first.worst.t1 == again.worst.t1 && first.worst.t2 == again.worst.t2 &&
                                  first.worst.x == again.worst.x && first.worst.y == again.worst.y &&
                                  first.alpha_hat == again.alpha_hat;
        auto ck = check("anti_dissipative_rejected", !first.passed, first.alpha_hat, bad.declared().alpha,
                        "witness t1 = " + format_double(first.worst.t1) + ", t2 = " + format_double(first.worst.t2));
        ck.extra["witness"] = {{"t1", first.worst.t1}, {"t2", first.worst.t2}, {"x", first.worst.x}, {"y", first.worst.y}};
        out.push_back(ck);
        out.push_back(check("witness_reproducible", reproducible, reproducible ? 1.0 : 0.0, 1.0));
    });
}

inline const std::vector<std::function<CriterionResult(const AcceptanceOptions&)>>& acceptance_criteria() {
    static const std::vector<std::function<CriterionResult(const AcceptanceOptions&)>> all{
        criterion_identities,    criterion_contraction,       criterion_pullback,
        criterion_ou_law,        criterion_entrance,          criterion_quasi_periodicity,
        criterion_invariant_measure, criterion_fokker_planck, criterion_audits};
    return all;
}

/// Flattens criterion results into verdict checks named "c<id>.<check>".
inline std::vector<CheckResult> flatten(const std::vector<CriterionResult>& results) {
    std::vector<CheckResult> flat;
    for (const auto& r : results) {
        CheckResult head;
        head.name = "criterion_" + std::to_string(r.id);
        head.passed = r.passed();
        head.value = r.seconds;
        head.threshold = r.budget;
        head.detail = r.title;
        flat.push_back(head);
        for (auto ck : r.checks) {
            ck.name = "c" + std::to_string(r.id) + "." + ck.name;
            flat.push_back(std::move(ck));
        }
    }
    return flat;
}

/// "criterion 4 PASS  O-U law of rho_t  (12.3 s)" plus the worst failing sub-check, if any.
inline std::string summary_line(const CriterionResult& r) {
    std::string line = "criterion " + std::to_string(r.id) + (r.passed() ? " PASS  " : " FAIL  ") + r.title;
    char buf[64];
    std::snprintf(buf, sizeof buf, "  (%.1f s)", r.seconds);
    line += buf;
    for (const auto& ck : r.checks)
        if (!ck.passed) line += "  [" + ck.name + " = " + format_double(ck.value) + " vs " + format_double(ck.threshold) + "]";
    return line;
}

}  // namespace qpsde

// qpsde command-line front end.
//
//   qpsde_cli <task> --config FILE [--set key.path=value ...] [--out DIR]
//
// Every run writes effective_config.yaml, manifest.json and verdict.json into the output
// directory next to the task's own CSV/JSON artifacts. Exit status: 0 when every check
// passes, 1 when a check fails, 2 on configuration or usage errors.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "qpsde/qpsde.hpp"

namespace fs = std::filesystem;
using namespace qpsde;
using acceptance_detail::check;
using acceptance_detail::steps_of;

namespace {

struct Context {
    ExperimentConfig cfg;
    QPCoefficients coeffs;
    fs::path out;
    std::uint64_t seed_hi;

    const RunConfig& run() const { return cfg.run; }
    YAML::Node block(const std::string& name) const { return cfg.task_block(name); }
};

template <class T>
T opt(const YAML::Node& block, const std::string& task, const std::string& key, T fallback) {
    return config_detail::get_or<T>(block, key, task, fallback);
}

std::vector<double> vec_opt(const YAML::Node& block, const std::string& task, const std::string& key,
                            std::vector<double> fallback) {
    return config_detail::get_or<std::vector<double>>(block, key, task, std::move(fallback));
}

std::vector<double> initial_state(const Context& ctx, const YAML::Node& block, const std::string& task) {
    auto x0 = vec_opt(block, task, "x0", std::vector<double>(ctx.coeffs.dim(), 0.0));
    if (x0.size() != ctx.coeffs.dim())
        throw ConfigError(task + ".x0", config_detail::line_of(block["x0"]), "wrong dimension");
    return x0;
}

void write_csv(const fs::path& path, const std::function<void(std::ostream&)>& body) {
    std::ostringstream os;
    body(os);
    write_text(path, os.str());
}

// ---------------------------------------------------------------------------------------

std::vector<CheckResult> task_validate(Context& ctx) {
    const auto& c = ctx.coeffs;
    const auto& r = ctx.run();
    const auto diss = check_dissipativity(c, r.audit_samples, r.audit_box, r.audit_seed);
    const auto reg = check_lipschitz_and_bounds(c, r.audit_samples, r.audit_box, r.audit_seed + 1);
    const auto& dc = c.declared();
    std::vector<CheckResult> out;
    auto ck = check("dissipativity", diss.passed, diss.alpha_hat, dc.alpha - 1e-6,
                    diss.passed ? "alpha_hat >= declared alpha"
                                : "witness t1 = " + format_double(diss.worst.t1) + ", t2 = " + format_double(diss.worst.t2));
    ck.extra["witness"] = {{"t1", diss.worst.t1}, {"t2", diss.worst.t2}, {"x", diss.worst.x}, {"y", diss.worst.y}};
    out.push_back(ck);
    out.push_back(check("lipschitz_beta", reg.beta_hat <= dc.beta + 1e-12, reg.beta_hat, dc.beta));
    out.push_back(check("bound_M", reg.M_hat <= dc.M + 1e-12, reg.M_hat, dc.M));
    out.push_back(check("holder_gamma", reg.gamma_hat >= dc.gamma - 0.05, reg.gamma_hat, dc.gamma - 0.05,
                        "fitted exponent of the time modulus"));
    const double rate = diss.alpha_hat - reg.beta_hat * reg.beta_hat / 2.0;
    nlohmann::json report{{"alpha_hat", diss.alpha_hat}, {"beta_hat", reg.beta_hat}, {"M_hat", reg.M_hat},
                          {"gamma_hat", reg.gamma_hat}, {"contraction_rate", rate},
                          {"witness", out.front().extra["witness"]}};
    if (rate > 0.0) report["second_moment_bound"] = second_moment_bound(diss.alpha_hat, reg.beta_hat, reg.M_hat);
    write_json(ctx.out / "audit.json", report);
    return out;
}

std::vector<CheckResult> task_simulate(Context& ctx) {
    const auto& c = ctx.coeffs;
    const auto& r = ctx.run();
    const auto b = ctx.block("simulate");
    const std::string t = "simulate";
    const double dt = r.dt;
    const std::int64_t s_idx = steps_of(opt<double>(b, t, "t_start", 0.0), dt);
    const std::int64_t t_idx = steps_of(opt<double>(b, t, "t_end", 5.0), dt);
    if (t_idx < s_idx) throw ConfigError("simulate.t_end", config_detail::line_of(b["t_end"]), "must be >= t_start");
    const auto x0 = initial_state(ctx, b, t);
    const auto flavor = opt<std::string>(b, t, "flavor", "u");
    const auto paths = opt<std::size_t>(b, t, "paths", 1);
    const auto every = std::max<std::size_t>(1, opt<std::size_t>(b, t, "every", 1));
    const double r1 = opt<double>(b, t, "r1", 0.0), r2 = opt<double>(b, t, "r2", 0.0);
    const auto m = opt<std::int64_t>(b, t, "shift_steps", 0);
    if (flavor != "u" && flavor != "u_r" && flavor != "K")
        throw ConfigError("simulate.flavor", config_detail::line_of(b["flavor"]), "must be u, u_r or K");
    ctx.seed_hi = r.seed + paths - 1;

    double end_sq = 0.0;
    for (std::size_t p = 0; p < paths; ++p) {
        const NoisePath w(r.seed + p, c.dim(), TimeGrid(dt));
        Trajectory tr = flavor == "K"     ? integrate_K(c, w, r1, r2, s_idx, t_idx, x0)
                        : flavor == "u_r" ? integrate_u_r(c, w, m, s_idx, t_idx, x0)
                                          : integrate_u(c, w, s_idx, t_idx, x0);
        write_csv(ctx.out / ("trajectory_" + std::to_string(r.seed + p) + ".csv"), [&](std::ostream& os) {
            os << "t";
            for (std::size_t j = 0; j < c.dim(); ++j) os << ",x_" << (j + 1);
            os << '\n';
            for (std::size_t i = 0; i < tr.size(); i += every) {
                os << format_double(tr.grid.time(tr.start_index + static_cast<std::int64_t>(i)));
                for (double v : tr.at(i)) os << ',' << format_double(v);
                os << '\n';
            }
        });
        for (double v : tr.back()) end_sq += v * v / static_cast<double>(paths);
    }
    std::vector<CheckResult> out;
    out.push_back(check("paths_written", true, static_cast<double>(paths), static_cast<double>(paths)));
    const auto& dc = c.declared();
    if (dc.alpha > dc.beta * dc.beta / 2.0 && dc.alpha > 0.0 && paths >= 2) {
        double x0sq = 0.0;
        for (double v : x0) x0sq += v * v;
        const double bound = second_moment_bound(dc.alpha, dc.beta, dc.M, x0sq);
        out.push_back(check("end_second_moment_within_bound", end_sq <= bound, end_sq, bound,
                            "sample mean of |X_T|^2 against the declared-constant bound"));
    }
    return out;
}

std::vector<CheckResult> task_pullback(Context& ctx) {
    const auto& c = ctx.coeffs;
    const auto& r = ctx.run();
    const auto b = ctx.block("pullback");
    const std::string t = "pullback";
    const double dt = r.dt;
    auto pcfg = ctx.cfg.pullback();
    pcfg.level_steps = opt<std::int64_t>(b, t, "level_steps", 0);
    const auto x0 = initial_state(ctx, b, t);
    const std::int64_t t_idx = steps_of(opt<double>(b, t, "t", 0.0), dt);
    const NoisePath w(r.seed, c.dim(), TimeGrid(dt));
    const bool tilde = b["s"].IsDefined() && !b["s"].IsNull();
    PullbackResult res;
    if (tilde) {
        const std::int64_t s_idx = steps_of(opt<double>(b, t, "s", 0.0), dt);
        res = pullback_phi_tilde(c, w, HullOffset(0.0, t_idx), HullOffset(0.0, s_idx), x0, pcfg.tol, pcfg.max_levels, pcfg);
    } else {
        res = pullback_phi(c, w, t_idx, x0, pcfg.tol, pcfg.max_levels, pcfg);
    }
    write_csv(ctx.out / "levels.csv", [&](std::ostream& os) { write_levels_csv(os, res); });
    nlohmann::json j{{"value", res.value},       {"converged", res.converged},     {"fitted_rate", res.fitted_rate},
                     {"level_steps", res.level_steps}, {"levels", res.levels.size()}, {"flavor", tilde ? "phi_tilde" : "phi"}};
    std::vector<CheckResult> out;
    out.push_back(check("converged", res.converged, res.levels.empty() ? NAN : res.levels.back().gap, pcfg.tol));
    out.push_back(check("fitted_rate_positive", res.fitted_rate > 0.0, res.fitted_rate, 0.0,
                        "slope of log gap against the level start time"));
    if (!tilde) {
        const std::int64_t back = steps_of(opt<double>(b, t, "verify_back", 1.0), dt);
        const auto earlier = pullback_phi(c, w, t_idx - back, x0, pcfg.tol, pcfg.max_levels, pcfg);
        const double dev = verify_random_path(c, w, earlier.value, t_idx - back, res.value, t_idx);
        j["random_path_deviation"] = dev;
        out.push_back(check("random_path_consistency", dev <= 10.0 * pcfg.tol, dev, 10.0 * pcfg.tol,
                            "|u(t, s, phi(s)) - phi(t)|"));
    }
    write_json(ctx.out / "pullback.json", j);
    return out;
}

std::vector<CheckResult> task_measure(Context& ctx) {
    const auto& c = ctx.coeffs;
    const auto& r = ctx.run();
    const auto b = ctx.block("measure");
    const std::string t = "measure";
    const double dt = r.dt;
    const auto pcfg = ctx.cfg.pullback();
    const std::size_t n = r.n_samples;
    const auto batches = opt<std::size_t>(b, t, "batches", 8);
    const std::int64_t t_idx = steps_of(opt<double>(b, t, "t", 0.0), dt);
    const bool tilde = b["s"].IsDefined() && !b["s"].IsNull();
    const std::int64_t s_idx = tilde ? steps_of(opt<double>(b, t, "s", 0.0), dt) : t_idx;
    const HullOffset tp(0.0, t_idx), sp(0.0, s_idx);
    const auto mu = estimate_rho_tilde(c, tp, sp, n, r.seed, pcfg);
    const auto nu = estimate_rho_tilde(c, tp, sp, n, r.seed + n, pcfg);
    ctx.seed_hi = r.seed + 2 * n - 1;
    save_measure((ctx.out / "rho.csv").string(), mu);
    const auto kind = c.dim() == 1 ? TransportKind::w1_sorted : TransportKind::energy;
    const auto floor = batched_distance(mu, nu, kind, batches);
    nlohmann::json j{{"t", TimeGrid(dt).time(t_idx)}, {"s", TimeGrid(dt).time(s_idx)}, {"n", n},
                     {"mean", mu.mean()},          {"covariance", mu.covariance()},
                     {"distance", to_string(kind)}, {"noise_floor", floor.mean}, {"noise_floor_stderr", floor.stderr_}};
    std::vector<CheckResult> out;
    out.push_back(check("noise_floor_finite", std::isfinite(floor.mean), floor.mean, 0.0,
                        "distance between two independent estimates"));
    if (c.is_ornstein_uhlenbeck()) {
        const auto law = ou_rho_tilde(ou_spec_from(c), TimeGrid(dt).time(t_idx), TimeGrid(dt).time(s_idx));
        const auto fit = gaussian_gof(mu, law);
        double zmax = 0.0;
        for (double z : fit.mean_z) zmax = std::max(zmax, std::abs(z));
        j["oracle"] = {{"mean", law.mean}, {"covariance", law.cov}, {"mean_z", fit.mean_z},
                       {"cov_rel_err", fit.cov_rel_err}, {"ks", fit.ks_stat}, {"ks_critical", fit.ks_critical}};
        out.push_back(check("oracle_mean_abs_z", zmax < 4.0, zmax, 4.0));
        out.push_back(check("oracle_cov_rel_err", fit.cov_rel_err < 0.05, fit.cov_rel_err, 0.05));
        if (c.dim() == 1) out.push_back(check("oracle_ks", fit.ks_stat < fit.ks_critical, fit.ks_stat, fit.ks_critical));
    }
    if (!tilde && b["entrance_from"].IsDefined()) {
        const std::int64_t from = steps_of(opt<double>(b, t, "entrance_from", 0.0), dt);
        const auto rho_s = estimate_rho(c, HullOffset(0.0, from), n, r.seed + 2 * n, pcfg);
        const auto pushed = pushforward(c, rho_s, from, t_idx, r.seed + 3 * n, dt, r.threads);
        ctx.seed_hi = r.seed + 4 * n - 1;
        const auto dist = batched_distance(pushed, mu, kind, batches);
        j["entrance_distance"] = dist.mean;
        out.push_back(check("entrance_over_floor", dist.mean <= 2.0 * floor.mean, dist.mean / floor.mean, 2.0));
    }
    write_json(ctx.out / "measure.json", j);
    return out;
}

std::vector<CheckResult> task_lift(Context& ctx) {
    const auto& c = ctx.coeffs;
    const auto& r = ctx.run();
    const auto b = ctx.block("lift");
    const std::string t = "lift";
    const double dt = r.dt;
    const auto pcfg = ctx.cfg.pullback();
    std::vector<CheckResult> out;
    nlohmann::json j;

    const auto cases = opt<int>(b, t, "cocycle_cases", 20);
    std::mt19937_64 rng(r.seed);
    std::uniform_real_distribution<double> u1(0.0, c.tau1()), u2(0.0, c.tau2()), ux(-3.0, 3.0);
    std::uniform_int_distribution<std::int64_t> un(1, 1500);
    double dev = 0.0;
    for (int i = 0; i < cases; ++i) {
        const NoisePath w(r.seed + static_cast<std::uint64_t>(i), c.dim(), TimeGrid(dt));
        std::vector<double> x(c.dim());
        for (auto& v : x) v = ux(rng);
        const auto p = make_cylinder_point(c, u1(rng), u2(rng), x);
        const std::int64_t m = un(rng), n = un(rng);
        const auto a = lift_step(c, w, p, m + n);
        const auto q = lift_step(c, shift(w, m), lift_step(c, w, p, m), n);
        for (std::size_t k = 0; k < c.dim(); ++k) dev = std::max(dev, std::abs(a.x[k] - q.x[k]));
        dev = std::max({dev, std::abs(a.a1 - q.a1), std::abs(a.a2 - q.a2)});
    }
    out.push_back(check("cocycle_max_deviation", dev == 0.0, dev, 0.0));

    const YAML::Node g = b["grid"], ta = b["time_average"];
    const auto n1 = opt<std::size_t>(g, "lift.grid", "n1", 4), n2 = opt<std::size_t>(g, "lift.grid", "n2", 4);
    const auto per = opt<std::size_t>(g, "lift.grid", "samples", 200);
    const auto T = opt<double>(ta, "lift.time_average", "T", 20.0);
    const auto slices = opt<std::size_t>(ta, "lift.time_average", "slices", n1 * n2);
    const auto batches = opt<std::size_t>(b, t, "batches", 8);
    const std::size_t total = n1 * n2 * per;
    const std::uint64_t s0 = r.seed + 1000;
    const auto grid_a = mu_bar_grid(c, n1, n2, per, s0, pcfg);
    const auto grid_b = mu_bar_grid(c, n1, n2, per, s0 + total, pcfg);
    const auto grid_c = mu_bar_grid(c, n1, n2, per, s0 + 2 * total, pcfg);
    const auto time_avg = mu_bar_time_average(c, T, slices, total / slices, s0 + 3 * total, pcfg);
    write_csv(ctx.out / "mu_bar_grid.csv", [&](std::ostream& os) { write_cylinder_csv(os, grid_a); });
    write_csv(ctx.out / "mu_bar_time_average.csv", [&](std::ostream& os) { write_cylinder_csv(os, time_avg); });
    const auto d_ta = batched_cylinder_distance(c, time_avg, grid_a, batches, r.threads);
    const auto floor = batched_cylinder_distance(c, grid_b, grid_a, batches, r.threads);
    j["grid_vs_time_average"] = {{"distance", d_ta.mean}, {"floor", floor.mean}};
    out.push_back(check("grid_vs_time_average_over_floor", d_ta.mean <= 2.0 * floor.mean, d_ta.mean / floor.mean, 2.0));

    for (double tt : vec_opt(b, t, "invariance_times", {0.25, 1.0})) {
        const auto rep = invariance_check(c, grid_a, grid_b, grid_c, steps_of(tt, dt), s0 + 4 * total + 1, dt, batches,
                                          r.threads);
        j["invariance"].push_back({{"t", tt}, {"distance", rep.dist}, {"floor", rep.noise_floor}});
        out.push_back(check("invariance_over_floor t=" + format_double(tt), rep.passed, rep.dist / rep.noise_floor, 2.0));
    }

    const NoisePath w(s0 + 5 * total, c.dim(), TimeGrid(dt));
    const auto p0 = make_cylinder_point(c, 0.0, 0.0, std::vector<double>(c.dim(), 0.0));
    const std::int64_t steps = steps_of(opt<double>(b, t, "birkhoff_T", 100.0), dt);
    const double tau1 = c.tau1();
    const std::vector<std::pair<std::string, Observable>> obs{
        {"x_1", [](const CylinderPoint& p) { return p.x[0]; }},
        {"|x|^2", [](const CylinderPoint& p) { double s = 0.0; for (double v : p.x) s += v * v; return s; }},
        {"sin(2 pi a1 / tau1)", [tau1](const CylinderPoint& p) { return std::sin(2.0 * std::numbers::pi * p.a1 / tau1); }}};
    for (const auto& [name, f] : obs) {
        const auto tm = birkhoff_average(c, w, p0, f, steps);
        const auto sm = space_average(grid_a, f);
        const double z = std::abs(tm.mean - sm.mean) / std::hypot(tm.stderr_, sm.stderr_);
        j["birkhoff"].push_back({{"observable", name}, {"time", tm.mean}, {"space", sm.mean}, {"z", z}});
        out.push_back(check("birkhoff_z " + name, z <= 3.0, z, 3.0));
    }
    ctx.seed_hi = s0 + 5 * total;
    write_json(ctx.out / "lift.json", j);
    return out;
}

std::vector<CheckResult> task_fokker_planck(Context& ctx) {
    const auto& c = ctx.coeffs;
    const auto& r = ctx.run();
    if (c.dim() != 1) throw ConfigError("coefficients.dim", 0, "fokker-planck needs dim = 1");
    const auto b = ctx.block("fokker-planck");
    const std::string t = "fokker-planck";
    const double dt = r.dt;
    std::vector<double> times;
    std::vector<std::int64_t> idx;
    for (double v : vec_opt(b, t, "times", {0.5, 1.0, 1.5, 2.0})) {
        idx.push_back(steps_of(v, dt));
        times.push_back(TimeGrid(dt).time(idx.back()));
    }
    if (times.empty() || !std::is_sorted(times.begin(), times.end()) || times.front() <= 0.0)
        throw ConfigError("fokker-planck.times", config_detail::line_of(b["times"]), "must be positive and ascending");
    const auto n_cells = opt<std::size_t>(b, t, "n_cells", 400);
    const auto dt_pde = opt<double>(b, t, "dt_pde", 1e-3);
    FPSolveOptions fo;
    fo.theta = opt<double>(b, t, "theta", 1.0);
    const auto n = opt<std::size_t>(b, t, "samples", r.n_samples);
    const auto tol = opt<double>(b, t, "residual_tol", 0.03);
    const auto shift_r = opt<double>(b, t, "shift_r", 0.37);

    std::vector<double> domain_times = times;
    domain_times.push_back(0.0);
    std::pair<double, double> dom;
    GaussianLaw start;
    if (c.is_ornstein_uhlenbeck()) {
        const auto sp = ou_spec_from(c);
        dom = ou_domain(sp, domain_times);
        start = ou_rho(sp, 0.0);
    } else {
        const auto rho0 = estimate_rho(c, 0.0, n, r.seed + n, ctx.cfg.pullback());
        const auto m = rho0.mean()[0], sd = std::sqrt(rho0.covariance()[0]);
        dom = {m - 10.0 * sd - 3.0, m + 10.0 * sd + 3.0};
        start = GaussianLaw{{m}, {sd * sd}};
    }
    const auto q0 = gaussian_density(start, dom.first, dom.second, n_cells, 0.0);
    const auto mc = estimate_rho_series(c, 0, idx, n, r.seed, ctx.cfg.pullback());
    ctx.seed_hi = r.seed + 2 * n - 1;
    const auto op = fp_operator_from(c);
    const auto rep = fp_entrance_residual(op, q0, times, mc, dt_pde, fo);
    DensityGrid q = q0;
    for (double tt : times) {
        q = fp_solve(op, q, q.time(), tt, dt_pde, fo);
        write_csv(ctx.out / ("density_t" + format_double(tt) + ".csv"), [&](std::ostream& os) { write_density_csv(os, q); });
    }
    const double shift = fp_shift_relation(c, q0, 0.0, shift_r, times, dt_pde, fo);
    auto j = residual_json(rep);
    j["shift_relation_l1"] = shift;
    j["domain"] = {dom.first, dom.second};
    write_json(ctx.out / "residual.json", j);
    std::vector<CheckResult> out;
    out.push_back(check("max_residual_l1", rep.max_l1 < tol, rep.max_l1, tol));
    out.push_back(check("max_step_mass_drift", rep.max_step_mass_drift < 1e-12, rep.max_step_mass_drift, 1e-12));
    out.push_back(check("min_density", rep.min_value >= 0.0, rep.min_value, 0.0));
    out.push_back(check("shift_relation_l1", shift < 1e-6, shift, 1e-6));
    return out;
}

std::vector<CheckResult> task_oracle(Context& ctx) {
    const auto& c = ctx.coeffs;
    if (!c.is_ornstein_uhlenbeck()) throw ConfigError("coefficients", 0, "oracle needs an O-U specification");
    const auto sp = ou_spec_from(c);
    const auto b = ctx.block("oracle");
    const auto refine = opt<int>(b, "oracle", "refine", 1);
    const auto times = vec_opt(b, "oracle", "times", {0.0, 0.25, 0.5, 0.75, 1.0});
    const std::size_t d = c.dim();
    double worst = 0.0;
    write_csv(ctx.out / "oracle.csv", [&](std::ostream& os) {
        os << "t";
        for (std::size_t i = 0; i < d; ++i) os << ",mean_" << (i + 1);
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t k = 0; k < d; ++k) os << ",cov_" << (i + 1) << (k + 1);
        os << '\n';
        for (double t : times) {
            const auto law = ou_rho(sp, t, refine);
            const auto exact = ou_mean_closed_form(sp, t, t);
            for (std::size_t i = 0; i < d; ++i) worst = std::max(worst, std::abs(exact[i] - law.mean[i]));
            os << format_double(t);
            for (double v : law.mean) os << ',' << format_double(v);
            for (double v : law.cov) os << ',' << format_double(v);
            os << '\n';
        }
    });
    const auto mb = ou_mu_bar_moments(sp);
    write_json(ctx.out / "oracle.json", {{"stationary_covariance", ou_stationary_covariance(sp)},
                                         {"mu_bar_mean", mb.mean}, {"mu_bar_second_moment", mb.second_moment}});
    return {check("quadrature_matches_closed_form_mean", worst < 1e-10, worst, 1e-10)};
}

std::vector<CheckResult> task_acceptance(Context& ctx) {
    const auto& r = ctx.run();
    const auto b = ctx.block("acceptance");
    AcceptanceOptions o{ctx.coeffs};
    o.dt = r.dt;
    o.seed = r.seed;
    o.threads = r.threads;
    o.audit_samples = r.audit_samples;
    o.audit_box = r.audit_box;
    o.fp_samples = opt<std::size_t>(b, "acceptance", "fp_samples", o.fp_samples);
    o.time_scale = opt<double>(b, "acceptance", "time_scale", 1.0);
    std::vector<double> only = vec_opt(b, "acceptance", "only", {});
    std::vector<CriterionResult> results;
    for (std::size_t i = 0; i < acceptance_criteria().size(); ++i) {
        if (!only.empty() && std::find(only.begin(), only.end(), double(i + 1)) == only.end()) continue;
        results.push_back(acceptance_criteria()[i](o));
        std::cout << summary_line(results.back()) << std::endl;
    }
    ctx.seed_hi = o.seed + (std::uint64_t{10} << 36);
    return flatten(results);
}

const std::map<std::string, std::function<std::vector<CheckResult>(Context&)>>& tasks() {
    static const std::map<std::string, std::function<std::vector<CheckResult>(Context&)>> t{
        {"validate", task_validate}, {"simulate", task_simulate},          {"pullback", task_pullback},
        {"measure", task_measure},   {"lift", task_lift},                  {"fokker-planck", task_fokker_planck},
        {"oracle", task_oracle},     {"acceptance", task_acceptance}};
    return t;
}

int run_task(const std::string& task, const std::string& config, const std::vector<std::string>& overrides,
             const std::string& out_override) {
    fs::path out = out_override.empty() ? fs::path("qpsde_out") / task : fs::path(out_override);
    try {
        auto cfg = load_config(config, overrides);
        if (out_override.empty()) out = fs::path(cfg.output_dir) / task;
        fs::create_directories(out);
        Context ctx{cfg, QPCoefficients(cfg.coefficients), out, cfg.run.seed};
        const std::string effective = emit_yaml(cfg.document) + "\n";
        write_text(out / "effective_config.yaml", effective);
        std::vector<CheckResult> checks;
        try {
            checks = tasks().at(task)(ctx);
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            checks.push_back(check("completed", false, 0.0, 0.0, e.what()));
        }
        write_json(out / "manifest.json", manifest_json(effective, task, cfg.run.seed, ctx.seed_hi));
        write_json(out / "verdict.json", verdict_json(task, checks));
        for (const auto& ck : checks)
            if (task != "acceptance" || !ck.passed)
                std::cout << (ck.passed ? "PASS " : "FAIL ") << ck.name << " = " << format_double(ck.value)
                          << " (threshold " << format_double(ck.threshold) << ")"
                          << (ck.detail.empty() ? "" : "  " + ck.detail) << '\n';
        const bool ok = all_passed(checks);
        std::cout << task << (ok ? " PASS" : " FAIL") << "  -> " << (out / "verdict.json").string() << '\n';
        return ok ? 0 : 1;
    } catch (const ConfigError& e) {
        std::cerr << e.what() << '\n';
        std::error_code ec;
        fs::create_directories(out, ec);
        if (!ec) write_json(out / "verdict.json", verdict_json(task, {check("config", false, 0.0, 0.0, e.what())}));
        return 2;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulation and verification toolkit for quasi-periodically forced SDEs"};
    app.require_subcommand(1);
    std::string config, out;
    std::vector<std::string> overrides;
    for (const auto& name : task_names()) {
        auto* sub = app.add_subcommand(name, "run the '" + name + "' task");
        sub->add_option("-c,--config", config, "experiment config (YAML)")->required()->check(CLI::ExistingFile);
        sub->add_option("--set", overrides, "override a config value, e.g. --set run.seed=7");
        sub->add_option("-o,--out", out, "output directory (default: <output_dir>/<task>)");
    }
    CLI11_PARSE(app, argc, argv);
    const std::string task = app.get_subcommands().front()->get_name();
    return run_task(task, config, overrides, out);
}

#include "rim/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rim/format.hpp"
#include "rim/integrator.hpp"
#include "rim/lyapunov_perron.hpp"
#include "rim/noise_path.hpp"
#include "rim/parallel.hpp"
#include "rim/rng.hpp"
#include "rim/stats.hpp"

namespace rim {

namespace {

// per-experiment stream salts keep path draws disjoint across experiments
constexpr std::uint64_t kSaltShape = 101;
constexpr std::uint64_t kSaltAttract = 102;
constexpr std::uint64_t kSaltCone = 103;
constexpr std::uint64_t kSaltKtail = 104;
constexpr std::uint64_t kSaltAmplitude = 105;
constexpr std::uint64_t kSaltSimulate = 106;

std::uint64_t path_seed(const ExperimentConfig& cfg, std::uint64_t salt,
                        std::uint64_t leg, std::uint64_t index) {
    return derive_stream(cfg.monte_carlo.master_seed, index, salt * 1000 + leg);
}

LyapunovPerron::Params solver_params(const ExperimentConfig& cfg, double nu) {
    LyapunovPerron::Params p;
    p.nu = nu;
    p.eta = cfg.dynamics.eta;
    p.lambda = cfg.dynamics.lambda;
    p.window_T = cfg.grids.window_T;
    p.tol = cfg.solver.tol;
    p.max_iter = static_cast<int>(cfg.solver.max_iter);
    return p;
}

nlohmann::json conditions_json(const ConditionReport& rep) {
    nlohmann::json j;
    j["c_b"] = rep.c_b;
    j["l_r"] = rep.l_r;
    j["m_alpha_lambda"] = rep.m_alpha_lambda;
    j["gamma_1_minus_alpha"] = rep.gamma_1ma;
    j["cond1_value"] = rep.cond1_value;
    j["cond2_lhs"] = rep.cond2_lhs;
    j["cond3_lhs"] = rep.cond3_lhs;
    j["lambda_star"] = rep.lambda_star;
    j["cond1_ok"] = rep.cond1_ok;
    j["cond2_ok"] = rep.cond2_ok;
    j["cond3_ok"] = rep.cond3_ok;
    return j;
}

double grid_span_backward(const ExperimentConfig& cfg) {
    return std::max(cfg.grids.tail_T, cfg.grids.window_T);
}

}  // namespace

SpectralModel build_model(const ModelConfig& cfg) {
    if (cfg.nonlinearity == "burgers")
        return SpectralModel::burgers(cfg.n_total, cfg.alpha, cfg.r_cut);
    // linear benchmark model: Burgers spectrum, zero tensor
    const auto n = static_cast<Eigen::Index>(cfg.n_total);
    Eigen::VectorXd lam(n);
    for (Eigen::Index k = 0; k < n; ++k)
        lam[k] = static_cast<double>(k + 1) * static_cast<double>(k + 1) - 1.0;
    return SpectralModel::diagonal(std::move(lam), 1, {}, std::numbers::pi / 2.0,
                                   cfg.alpha, cfg.r_cut);
}

// ---------------------------------------------------------------------------
// shape
// ---------------------------------------------------------------------------

ExperimentReport run_shape(const ExperimentConfig& cfg, unsigned threads) {
    const SpectralModel model = build_model(cfg.model);
    if (model.r_cut() > 1.0) throw ConfigError("shape: requires R <= 1");
    const double R = model.r_cut();
    const double eta = cfg.dynamics.eta;
    const double lambda = cfg.dynamics.lambda;
    const std::size_t n_paths = cfg.monte_carlo.n_paths;
    const auto n_cal = static_cast<std::size_t>(
        std::ceil(cfg.shape.calibration_fraction * static_cast<double>(n_paths)));

    struct Row {
        double sigma, nu;
        std::size_t path_id;
        bool calib;
        double xi_coeff, norm_xi;
        double norm_h, lhs, envelope, ratio;
        double norm_vs, norm_vs_over;  // C-eta norms: ||v_s*||, and /||xi_solved||
        double vs_g1;
        double stage[4];
        double k_tilde, k_pm, k2, z0q;
        bool in_hyp;
        int iterations;
        double contraction;
    };

    ExperimentReport rep;
    rep.experiment = "shape";
    nlohmann::json legs_json = nlohmann::json::array();
    std::vector<Row> all_rows;

    for (std::size_t leg = 0; leg < cfg.shape.sigma_sweep.size(); ++leg) {
        const double sigma = cfg.shape.sigma_sweep[leg];
        if (sigma <= 0.0) throw ConfigError("shape: sigma must be > 0");
        const double nu = cfg.shape.nu_over_sigma * sigma;
        if (!(std::abs(nu) < sigma)) throw ConfigError("shape: requires |nu| < sigma");
        const auto crep = model.check_conditions(nu, eta, cfg.dynamics.delta, lambda);
        if (!crep.cond1_ok)
            throw ConfigError("shape: condition (1) fails for sigma leg " + fmt_g(sigma));
        if (leg == 0) rep.summary["conditions"] = conditions_json(crep);

        const double span = grid_span_backward(cfg);
        const TimeGrid grid = TimeGrid::span(-span, 0.0, cfg.grids.dt);
        const auto params = solver_params(cfg, nu);

        std::vector<std::vector<Row>> per_path(n_paths);
        parallel_for(n_paths, threads, [&](std::size_t p) {
            const NoisePath path =
                make_noise_path(grid, path_seed(cfg, kSaltShape, leg, p), sigma);
            const LyapunovPerron fib(model, path, 0.0, params);
            const double z0 = fib.z0();
            const auto kf = compute_k_functionals(path, nu, sigma, eta);
            auto& rows = per_path[p];
            const auto n = static_cast<Eigen::Index>(model.n_total());
            const double sqm = std::sqrt(model.mass());
            for (int sign = -1; sign <= 1; sign += 2) {
                for (std::uint64_t m = (sign < 0) ? 1 : 0; m <= cfg.shape.xi_count; ++m) {
                    // m = 0 contributes the trivial xi = 0 row once
                    const double nxi =
                        (static_cast<double>(m) / static_cast<double>(cfg.shape.xi_count)) *
                        (R / 2.0);
                    const double a = sign * nxi / sqm;
                    StateVector xi = StateVector::Zero(n);
                    xi[0] = a;
                    Row r{};
                    r.sigma = sigma;
                    r.nu = nu;
                    r.path_id = p;
                    r.calib = p < n_cal;
                    r.xi_coeff = a;
                    r.norm_xi = nxi;
                    if (m == 0) {
                        rows.push_back(r);  // zero row: all fields zero, trivially satisfied
                        continue;
                    }
                    const StateVector xin = std::exp(-z0) * xi;
                    ManifoldSample s = fib.solve_fixed_point(xin);
                    const StateVector psi = std::exp(z0) * s.h;
                    const StateVector quad = model.ls_inverse_bs(xi);
                    r.norm_h = model.norm(s.h);
                    r.lhs = model.norm(psi - quad);
                    r.envelope = (nxi + R * R + std::sqrt(sigma)) * nxi * nxi;
                    r.ratio = r.lhs / r.envelope;
                    r.norm_vs = s.norm_vs_ceta;
                    r.norm_vs_over = s.norm_vs_ceta / model.norm(xin);
                    r.vs_g1 = s.vs_minus_g1_ceta;
                    for (int q = 0; q < 4; ++q) r.stage[q] = s.stage_err[q];
                    r.k_tilde = path.k_tilde;
                    r.k_pm = path.k_pm;
                    r.k2 = kf.k2;
                    r.z0q = path.z0_quadrature;
                    r.in_hyp = !s.out_of_hypothesis;
                    r.iterations = s.iteration_count;
                    r.contraction = s.contraction_estimate;
                    rows.push_back(r);
                }
            }
        });
        for (auto& rows : per_path)
            all_rows.insert(all_rows.end(), rows.begin(), rows.end());
    }

    // fitted constant from the calibration subset (pooled across legs)
    double cal_max = 0.0;
    for (const auto& r : all_rows)
        if (r.calib && r.in_hyp && r.norm_xi > 0.0) cal_max = std::max(cal_max, r.ratio);
    const double c_fit = cfg.shape.safety_factor * cal_max;
    rep.summary["fitted_c"] = c_fit;
    rep.summary["calibration_max_ratio"] = cal_max;

    bool passed = true;
    double prev_viol = 1.0;
    bool nonincreasing = true;
    for (std::size_t leg = 0; leg < cfg.shape.sigma_sweep.size(); ++leg) {
        const double sigma = cfg.shape.sigma_sweep[leg];
        std::size_t n_val = 0, n_viol = 0, n_all = 0, n_sat = 0, n_omega = 0, n_out = 0;
        for (const auto& r : all_rows) {
            if (r.sigma != sigma) continue;
            if (!r.in_hyp) {
                ++n_out;
                continue;
            }
            const bool sat = r.norm_xi == 0.0 || r.ratio <= c_fit;
            ++n_all;
            n_sat += sat ? 1 : 0;
            if (r.k_pm > 1.0 / std::sqrt(sigma)) ++n_omega;
            if (!r.calib && r.norm_xi > 0.0) {
                ++n_val;
                if (!sat) ++n_viol;
            }
        }
        const double viol =
            n_val ? static_cast<double>(n_viol) / static_cast<double>(n_val) : 0.0;
        nlohmann::json leg_json;
        leg_json["sigma"] = sigma;
        leg_json["nu"] = cfg.shape.nu_over_sigma * sigma;
        leg_json["validation_rows"] = n_val;
        leg_json["violation_fraction"] = viol;
        leg_json["satisfied_fraction"] = n_all ? static_cast<double>(n_sat) / n_all : 1.0;
        leg_json["omega_k_fraction"] =
            n_all ? static_cast<double>(n_omega) / static_cast<double>(n_all) : 0.0;
        leg_json["exp_minus_inv_sqrt_sigma"] = std::exp(-1.0 / std::sqrt(sigma));
        leg_json["out_of_hypothesis_rows"] = n_out;
        legs_json.push_back(leg_json);
        if (viol > cfg.shape.max_violation_fraction) passed = false;
        if (viol > prev_viol + 1e-12) nonincreasing = false;
        prev_viol = viol;
    }
    rep.summary["legs"] = legs_json;
    rep.summary["violations_nonincreasing"] = nonincreasing;
    passed = passed && nonincreasing;
    rep.passed = passed;

    CsvTable table;
    table.name = "rows";
    table.header = {"sigma",      "nu",         "path_id",   "calibration", "xi",
                    "norm_xi",    "norm_h",     "lhs",       "envelope",    "ratio",
                    "norm_vs",    "norm_vs_over_xi",         "vs_minus_g1", "stage_v_g1",
                    "stage_g1_g2", "stage_g2_g3", "stage_g3_pred", "k_tilde", "k_pm",
                    "k2",         "z0_quadrature", "in_hypothesis", "iterations",
                    "contraction"};
    for (const auto& r : all_rows) {
        table.rows.push_back({fmt_g(r.sigma), fmt_g(r.nu), fmt_g(r.path_id),
                              r.calib ? "1" : "0", fmt_g(r.xi_coeff), fmt_g(r.norm_xi),
                              fmt_g(r.norm_h), fmt_g(r.lhs), fmt_g(r.envelope),
                              fmt_g(r.ratio), fmt_g(r.norm_vs), fmt_g(r.norm_vs_over),
                              fmt_g(r.vs_g1), fmt_g(r.stage[0]), fmt_g(r.stage[1]),
                              fmt_g(r.stage[2]), fmt_g(r.stage[3]), fmt_g(r.k_tilde),
                              fmt_g(r.k_pm), fmt_g(r.k2), fmt_g(r.z0q),
                              r.in_hyp ? "1" : "0", fmt_g(r.iterations),
                              fmt_g(r.contraction)});
    }
    rep.tables.push_back(std::move(table));
    return rep;
}

// ---------------------------------------------------------------------------
// attraction
// ---------------------------------------------------------------------------

ExperimentReport run_attraction(const ExperimentConfig& cfg, unsigned threads) {
    const SpectralModel model = build_model(cfg.model);
    const double nu = cfg.dynamics.nu;
    const double sigma = cfg.dynamics.sigma;
    const auto crep =
        model.check_conditions(nu, cfg.dynamics.eta, cfg.dynamics.delta, cfg.dynamics.lambda);
    if (!crep.all_ok())
        throw ConfigError("attract: conditions (1)-(3) must hold for the configured model");
    if (!(model.lambda_star() > 4.0 * nu))
        throw ConfigError("attract: requires lambda_* > 4 nu");
    const double lam_star = model.lambda_star();
    const double R = model.r_cut();
    const std::size_t n_paths = cfg.monte_carlo.n_paths;
    const double t_end = cfg.attract.t_end;
    const auto n_samples =
        static_cast<std::size_t>(std::llround(t_end / cfg.attract.sample_dt)) + 1;

    struct Sample {
        double t, dist, bound, d_temper, argmin;
        bool ok, at_boundary;
    };
    struct PathResult {
        bool flagged = false;
        double tau0 = 0.0;
        std::vector<Sample> samples;
        double rate = 0.0;
        bool rate_ok = false, bound_ok = true;
    };
    std::vector<PathResult> results(n_paths);

    const double span = grid_span_backward(cfg);
    const TimeGrid grid = TimeGrid::span(-span, t_end, cfg.grids.dt);
    const auto params = solver_params(cfg, nu);

    parallel_for(n_paths, threads, [&](std::size_t p) {
        PathResult res;
        const NoisePath path =
            make_noise_path(grid, path_seed(cfg, kSaltAttract, 0, p), sigma);
        const auto n = static_cast<Eigen::Index>(model.n_total());
        // start on the fibre-0 manifold, then push off in the s directions
        LyapunovPerron fib0(model, path, 0.0, params);
        StateVector xi = StateVector::Zero(n);
        xi[0] = cfg.attract.xi0;
        StateVector u0 = fib0.psi_graph(xi);
        u0[0] += cfg.attract.xi0;
        u0[1] += cfg.attract.pert_mode2;
        if (n > 2) u0[2] += cfg.attract.pert_mode3;
        if (model.norm(u0) >= R)
            throw ConfigError("attract: u0 leaves B_R; reduce xi0/perturbation");
        const double z0 = path.z_at(0.0);
        const Trajectory traj = integrate_v(model, path, 0.0, std::exp(-z0) * u0, t_end,
                                            cfg.grids.dt, nu);
        // first exit from B_R in u coordinates
        res.tau0 = t_end + cfg.grids.dt;
        for (std::size_t i = 0; i <= traj.grid.n_steps; ++i) {
            const double t = traj.grid.t(i);
            const double nu_norm = model.norm(traj.at(i)) * std::exp(path.z_at(t));
            if (nu_norm >= R) {
                res.tau0 = t;
                break;
            }
        }
        res.flagged = res.tau0 < cfg.attract.min_observation;
        if (!res.flagged) {
            std::vector<double> ts, logds;
            for (std::size_t s = 0; s < n_samples; ++s) {
                const double t = static_cast<double>(s) * cfg.attract.sample_dt;
                if (t >= res.tau0 || t > t_end + 1e-12) break;
                const std::size_t it = traj.grid.index_of(t);
                const StateVector u = std::exp(path.z_at(t)) * traj.at(it);
                LyapunovPerron fib(model, path, t, params);
                const DistanceResult dr = fib.dist_to_manifold(u);
                Sample smp;
                smp.t = t;
                smp.dist = dr.distance;
                smp.d_temper = std::exp(path.z_at(t) + path.zint_at(t));
                smp.bound = 2.0 * R * smp.d_temper * std::exp(-lam_star * t);
                smp.ok = dr.distance <= smp.bound * (1.0 + 1e-9);
                smp.argmin = dr.argmin_xi;
                smp.at_boundary = dr.at_boundary;
                res.samples.push_back(smp);
                res.bound_ok = res.bound_ok && smp.ok;
                if (dr.distance > cfg.attract.dist_floor) {
                    ts.push_back(t);
                    logds.push_back(std::log(dr.distance));
                }
            }
            if (ts.size() >= 3) {
                res.rate = -fit_line(ts, logds).slope;
                res.rate_ok = res.rate >= 0.5 * lam_star;
            }
        }
        results[p] = std::move(res);
    });

    std::size_t n_unflagged = 0, n_bound_ok = 0, n_rate_ok = 0;
    for (const auto& r : results) {
        if (r.flagged) continue;
        ++n_unflagged;
        n_bound_ok += r.bound_ok ? 1 : 0;
        n_rate_ok += r.rate_ok ? 1 : 0;
    }
    ExperimentReport rep;
    rep.experiment = "attract";
    rep.summary["conditions"] = conditions_json(crep);
    rep.summary["n_paths"] = n_paths;
    rep.summary["n_flagged"] = n_paths - n_unflagged;
    rep.summary["bound_fraction"] =
        n_unflagged ? static_cast<double>(n_bound_ok) / n_unflagged : 0.0;
    rep.summary["rate_fraction"] =
        n_unflagged ? static_cast<double>(n_rate_ok) / n_unflagged : 0.0;
    rep.passed = n_unflagged > 0 &&
                 static_cast<double>(n_bound_ok) / n_unflagged >=
                     cfg.attract.min_bound_fraction &&
                 static_cast<double>(n_rate_ok) / n_unflagged >= cfg.attract.min_rate_fraction;

    CsvTable paths_tab;
    paths_tab.name = "paths";
    paths_tab.header = {"path_id", "flagged", "tau0", "rate", "rate_ok", "bound_ok"};
    CsvTable samp_tab;
    samp_tab.name = "samples";
    samp_tab.header = {"path_id", "t",      "dist",        "bound",
                       "d_temper", "argmin_xi", "at_boundary", "ok"};
    for (std::size_t p = 0; p < n_paths; ++p) {
        const auto& r = results[p];
        paths_tab.rows.push_back({fmt_g(p), r.flagged ? "1" : "0", fmt_g(r.tau0),
                                  fmt_g(r.rate), r.rate_ok ? "1" : "0",
                                  r.bound_ok ? "1" : "0"});
        for (const auto& s : r.samples)
            samp_tab.rows.push_back({fmt_g(p), fmt_g(s.t), fmt_g(s.dist), fmt_g(s.bound),
                                     fmt_g(s.d_temper), fmt_g(s.argmin),
                                     s.at_boundary ? "1" : "0", s.ok ? "1" : "0"});
    }
    rep.tables.push_back(std::move(paths_tab));
    rep.tables.push_back(std::move(samp_tab));
    return rep;
}

// ---------------------------------------------------------------------------
// cone
// ---------------------------------------------------------------------------

ExperimentReport run_cone(const ExperimentConfig& cfg, unsigned threads) {
    const SpectralModel model = build_model(cfg.model);
    const double nu = cfg.dynamics.nu;
    const double sigma = cfg.dynamics.sigma;
    const double delta = cfg.dynamics.delta;
    const auto crep =
        model.check_conditions(nu, cfg.dynamics.eta, delta, cfg.dynamics.lambda);
    if (!crep.cond2_ok || !crep.cond3_ok)
        throw ConfigError("cone: conditions (2) and (3) must hold");
    const double lam_star = model.lambda_star();
    const std::size_t n_pairs = cfg.monte_carlo.n_paths;
    const double t_end = cfg.cone.t_end;

    struct PairResult {
        int type = 0;
        bool entered = false;
        double t_entry = -1.0;
        std::size_t re_exits = 0;
        std::size_t decay_checks = 0, decay_violations = 0;
        double max_decay_ratio = 0.0;
    };
    std::vector<PairResult> results(n_pairs);

    const TimeGrid grid = TimeGrid::span(-cfg.grids.tail_T, t_end, cfg.grids.dt);
    parallel_for(n_pairs, threads, [&](std::size_t p) {
        PairResult res;
        res.type = static_cast<int>(p % 2);  // 0: s-only difference, 1: c-dominant
        const NoisePath path =
            make_noise_path(grid, path_seed(cfg, kSaltCone, 0, p), sigma);
        Rng rng(splitmix64(path.seed + 0xC0DE));
        const auto n = static_cast<Eigen::Index>(model.n_total());
        StateVector u0 = StateVector::Zero(n);
        u0[0] = cfg.cone.u0_scale * rng.next_normal();
        u0[1] = 0.5 * cfg.cone.u0_scale * rng.next_normal();
        if (n > 2) u0[2] = 0.25 * cfg.cone.u0_scale * rng.next_normal();
        StateVector du = StateVector::Zero(n);
        if (res.type == 0) {
            if (n > 2) du[2] = cfg.cone.pert_scale * (1.0 + 0.2 * rng.next_normal());
            else du[1] = cfg.cone.pert_scale;
        } else {
            du[0] = cfg.cone.pert_scale * (1.0 + 0.2 * rng.next_normal());
            du[1] = 0.25 * cfg.cone.pert_scale * rng.next_normal();
        }
        const double z0 = path.z_at(0.0);
        const double emz0 = std::exp(-z0);
        const Trajectory t1 =
            integrate_v(model, path, 0.0, emz0 * u0, t_end, cfg.grids.dt, nu);
        const Trajectory t2 = integrate_v(model, path, 0.0, emz0 * (u0 + du), t_end,
                                          cfg.grids.dt, nu);
        const std::size_t i0 = path.grid.index_of(0.0);
        double q0sq = 0.0;
        bool entered = false;
        for (std::size_t i = 0; i <= t1.grid.n_steps; ++i) {
            const StateVector d = t2.at(i) - t1.at(i);
            const double pn = model.norm(model.project_c(d));
            const double qn = model.norm(model.project_s(d));
            if (i == 0) q0sq = qn * qn;
            const bool inside = qn < delta * pn;
            if (entered && qn > delta * pn + cfg.cone.cone_tol) {
                ++res.re_exits;
                entered = false;  // re-arm so repeated excursions are all counted
            }
            if (!entered && !res.entered && !inside && i > 0) {
                // outside the cone since t = 0: comparison-principle decay
                const double t = t1.grid.t(i);
                const double zint = path.zint[i0 + i] - path.zint[i0];
                const double rhs = q0sq * std::exp(-0.5 * lam_star * t + 2.0 * zint);
                ++res.decay_checks;
                const double ratio = qn * qn / rhs;
                res.max_decay_ratio = std::max(res.max_decay_ratio, ratio);
                if (ratio > 1.0 + 1e-9) ++res.decay_violations;
            }
            if (inside && !res.entered) {
                res.entered = true;
                res.t_entry = t1.grid.t(i);
            }
            if (inside) entered = true;
        }
        results[p] = std::move(res);
    });

    std::size_t re_exits = 0, viol = 0, checks = 0;
    for (const auto& r : results) {
        re_exits += r.re_exits;
        viol += r.decay_violations;
        checks += r.decay_checks;
    }
    ExperimentReport rep;
    rep.experiment = "cone";
    rep.summary["conditions"] = conditions_json(crep);
    rep.summary["n_pairs"] = n_pairs;
    rep.summary["re_exits"] = re_exits;
    rep.summary["decay_checks"] = checks;
    rep.summary["decay_violations"] = viol;
    rep.passed = re_exits == 0 && viol == 0;

    CsvTable tab;
    tab.name = "pairs";
    tab.header = {"pair_id", "type",        "entered",      "t_entry",
                  "re_exits", "decay_checks", "decay_violations", "max_decay_ratio"};
    for (std::size_t p = 0; p < n_pairs; ++p) {
        const auto& r = results[p];
        tab.rows.push_back({fmt_g(p), fmt_g(r.type), r.entered ? "1" : "0",
                            fmt_g(r.t_entry), fmt_g(r.re_exits), fmt_g(r.decay_checks),
                            fmt_g(r.decay_violations), fmt_g(r.max_decay_ratio)});
    }
    rep.tables.push_back(std::move(tab));
    return rep;
}

// ---------------------------------------------------------------------------
// ktail
// ---------------------------------------------------------------------------

ExperimentReport run_ktail(const ExperimentConfig& cfg, unsigned threads) {
    if (cfg.grids.tail_T < 50.0) throw ConfigError("ktail: requires tail_T >= 50");
    if (cfg.grids.dt > 0.01 + 1e-15) throw ConfigError("ktail: requires dt <= 0.01");
    const double sigma = cfg.dynamics.sigma;
    const double nu = cfg.dynamics.nu;
    const double eta = cfg.dynamics.eta;
    if (sigma <= 0.0) throw ConfigError("ktail: requires sigma > 0");
    if (!(std::abs(nu) + std::abs(sigma) < 0.5 * eta) || !(std::abs(nu) <= std::abs(sigma)))
        throw ConfigError("ktail: K2 bound requires |nu|+|sigma| < eta/2 and |nu| <= |sigma|");
    const std::size_t n_paths = cfg.monte_carlo.n_paths;

    struct Row {
        double k_tilde, k_pm, k2, z0q, z0_rhs, k2_ratio;
        bool z0_ok;
    };
    std::vector<Row> rows(n_paths);
    const TimeGrid grid = TimeGrid::span(-cfg.grids.tail_T, 0.0, cfg.grids.dt);
    parallel_for(n_paths, threads, [&](std::size_t p) {
        const NoisePath path =
            make_noise_path(grid, path_seed(cfg, kSaltKtail, 0, p), sigma);
        const auto kf = compute_k_functionals(path, nu, sigma, eta);
        Row r;
        r.k_tilde = path.k_tilde;
        r.k_pm = path.k_pm;
        r.k2 = kf.k2;
        r.z0q = path.z0_quadrature;
        r.z0_rhs = sigma * (path.k_tilde + 1.0);
        r.z0_ok = r.z0q <= r.z0_rhs * (1.0 + 1e-12) + 1e-300;
        r.k2_ratio = kf.k2 / (std::exp(std::abs(sigma) * path.k_pm) * (1.0 + path.k_pm));
        rows[p] = r;
    });

    std::vector<double> two_ktilde;
    two_ktilde.reserve(n_paths);
    for (const auto& r : rows) two_ktilde.push_back(2.0 * r.k_tilde);
    const double ks = ks_statistic_exp1(two_ktilde);

    const auto n_cal = static_cast<std::size_t>(std::ceil(0.2 * static_cast<double>(n_paths)));
    double cal_max = 0.0;
    for (std::size_t p = 0; p < std::min(n_cal, n_paths); ++p)
        cal_max = std::max(cal_max, rows[p].k2_ratio);
    const double k2_c = 1.25 * cal_max;
    std::size_t z0_viol = 0, k2_viol = 0;
    for (const auto& r : rows) {
        if (!r.z0_ok) ++z0_viol;
        if (r.k2_ratio > k2_c) ++k2_viol;
    }

    ExperimentReport rep;
    rep.experiment = "ktail";
    rep.summary["n_paths"] = n_paths;
    rep.summary["ks_statistic_2ktilde_exp1"] = ks;
    rep.summary["ks_threshold"] = cfg.ktail.ks_threshold;
    rep.summary["z0_bound_violations"] = z0_viol;
    rep.summary["k2_fitted_c"] = k2_c;
    rep.summary["k2_violations"] = k2_viol;
    rep.passed = ks < cfg.ktail.ks_threshold && z0_viol == 0 && k2_viol == 0;

    CsvTable tab;
    tab.name = "rows";
    tab.header = {"path_id", "k_tilde", "k_pm",   "k2",
                  "z0_quadrature", "z0_rhs",  "z0_ok", "k2_ratio"};
    for (std::size_t p = 0; p < n_paths; ++p) {
        const auto& r = rows[p];
        tab.rows.push_back({fmt_g(p), fmt_g(r.k_tilde), fmt_g(r.k_pm), fmt_g(r.k2),
                            fmt_g(r.z0q), fmt_g(r.z0_rhs), r.z0_ok ? "1" : "0",
                            fmt_g(r.k2_ratio)});
    }
    rep.tables.push_back(std::move(tab));
    return rep;
}

// ---------------------------------------------------------------------------
// amplitude
// ---------------------------------------------------------------------------

ExperimentReport run_amplitude(const ExperimentConfig& cfg, unsigned threads) {
    const std::size_t n_paths = cfg.monte_carlo.n_paths;
    ExperimentReport rep;
    rep.experiment = "amplitude";
    nlohmann::json legs = nlohmann::json::array();
    CsvTable tab;
    tab.name = "rows";
    tab.header = {"eps", "path_id", "sup_err", "tolerance", "ok", "sup_us", "blowup"};

    bool passed = true;
    double prev_median = -1.0;
    for (std::size_t leg = 0; leg < cfg.amplitude.epsilons.size(); ++leg) {
        const double eps = cfg.amplitude.epsilons[leg];
        if (eps <= 0.0 || eps > 0.2)
            throw ConfigError("amplitude: requires 0 < eps <= 0.2");
        const double sigma = eps;
        const double nu = cfg.amplitude.nu0 * eps * eps;
        const double t_end = 1.0 / (eps * eps);
        const double dt = cfg.grids.dt;
        // model without cut-off interference: the full system runs uncut
        SpectralModel model = build_model(cfg.model);

        struct Row {
            double sup_err = 0.0, sup_us = 0.0;
            bool ok = false, blowup = false;
        };
        std::vector<Row> rows(n_paths);
        const TimeGrid grid = TimeGrid::span(-cfg.grids.tail_T, t_end, dt);
        parallel_for(n_paths, threads, [&](std::size_t p) {
            const NoisePath path =
                make_noise_path(grid, path_seed(cfg, kSaltAmplitude, leg, p), sigma);
            const auto n = static_cast<Eigen::Index>(model.n_total());
            Row r;
            StateVector u0 = StateVector::Zero(n);
            u0[0] = eps * cfg.amplitude.a0;
            const double z0 = path.z_at(0.0);
            IntegrateOptions opts;
            opts.cutoff = false;
            Trajectory traj;
            try {
                traj =
                    integrate_v(model, path, 0.0, std::exp(-z0) * u0, t_end, dt, nu, opts);
            } catch (const BlowUpError&) {
                r.blowup = true;
                rows[p] = r;
                return;
            }
            const std::size_t i0 = path.grid.index_of(0.0);
            // slow-time Brownian path W~(T) = eps * w(T / eps^2)
            std::vector<double> w_slow(traj.grid.n_steps + 1);
            for (std::size_t i = 0; i < w_slow.size(); ++i)
                w_slow[i] = eps * path.w[i0 + i];
            const std::vector<double> amp =
                integrate_amplitude(cfg.amplitude.nu0, cfg.amplitude.a0, w_slow,
                                    eps * eps * dt);
            double sup_err = 0.0, sup_us = 0.0;
            for (std::size_t i = 0; i <= traj.grid.n_steps; ++i) {
                const double z = path.z[i0 + i];
                const double u1 = std::exp(z) * traj.states(static_cast<Eigen::Index>(i), 0);
                sup_err = std::max(sup_err, std::abs(u1 - eps * amp[i]));
                const StateVector us =
                    std::exp(z) * model.project_s(traj.at(i));
                sup_us = std::max(sup_us, model.norm(us));
            }
            r.sup_err = sup_err;
            r.sup_us = sup_us;
            r.ok = sup_err <= cfg.amplitude.tol_factor * eps * eps;
            rows[p] = r;
        });

        std::vector<double> errs;
        std::size_t n_ok = 0, n_blow = 0;
        for (std::size_t p = 0; p < n_paths; ++p) {
            const auto& r = rows[p];
            tab.rows.push_back({fmt_g(eps), fmt_g(p), fmt_g(r.sup_err),
                                fmt_g(cfg.amplitude.tol_factor * eps * eps),
                                r.ok ? "1" : "0", fmt_g(r.sup_us), r.blowup ? "1" : "0"});
            if (r.blowup) {
                ++n_blow;
                continue;
            }
            errs.push_back(r.sup_err);
            if (r.ok) ++n_ok;
        }
        const double frac = n_paths ? static_cast<double>(n_ok) / n_paths : 0.0;
        const double med = errs.empty() ? 0.0 : quantile(errs, 0.5);
        nlohmann::json lj;
        lj["eps"] = eps;
        lj["fraction_ok"] = frac;
        lj["median_sup_err"] = med;
        lj["blowups"] = n_blow;
        legs.push_back(lj);
        if (frac < cfg.amplitude.min_fraction) passed = false;
        if (prev_median >= 0.0 && med > prev_median) passed = false;  // must decrease
        prev_median = med;
    }
    rep.summary["legs"] = legs;
    rep.passed = passed;
    rep.tables.push_back(std::move(tab));
    return rep;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

ExperimentReport run_simulate(const ExperimentConfig& cfg, unsigned threads) {
    (void)threads;
    const SpectralModel model = build_model(cfg.model);
    const auto n = static_cast<Eigen::Index>(model.n_total());
    if (cfg.simulate.u0.size() > model.n_total())
        throw ConfigError("simulate: u0 has more coefficients than model modes");
    StateVector u0 = StateVector::Zero(n);
    for (std::size_t i = 0; i < cfg.simulate.u0.size(); ++i)
        u0[static_cast<Eigen::Index>(i)] = cfg.simulate.u0[i];

    const double t_end = cfg.simulate.t_end;
    const double span = grid_span_backward(cfg);
    const TimeGrid grid = TimeGrid::span(-span, t_end, cfg.grids.dt);
    const NoisePath path = make_noise_path(grid, path_seed(cfg, kSaltSimulate, 0, 0),
                                           cfg.dynamics.sigma);
    const double z0 = path.z_at(0.0);
    IntegrateOptions opts;
    opts.cutoff = cfg.simulate.cutoff;
    const Trajectory vtraj = integrate_v(model, path, 0.0, std::exp(-z0) * u0, t_end,
                                         cfg.grids.dt, cfg.dynamics.nu, opts);
    const Trajectory utraj = to_u(vtraj, path);

    ExperimentReport rep;
    rep.experiment = "simulate";
    const bool with_dist = cfg.simulate.dist_sample_dt > 0.0;
    LyapunovPerron::Params params = solver_params(cfg, cfg.dynamics.nu);

    CsvTable tab;
    tab.name = "trajectory";
    tab.header = {"t"};
    for (Eigen::Index k = 0; k < n; ++k) tab.header.push_back("u" + std::to_string(k + 1));
    tab.header.push_back("norm_u");
    if (with_dist) tab.header.push_back("dist_to_manifold");
    for (std::size_t i = 0; i <= utraj.grid.n_steps; ++i) {
        std::vector<std::string> row{fmt_g(utraj.grid.t(i))};
        const StateVector u = utraj.at(i);
        for (Eigen::Index k = 0; k < n; ++k) row.push_back(fmt_g(u[k]));
        row.push_back(fmt_g(model.norm(u)));
        if (with_dist) {
            const double t = utraj.grid.t(i);
            const double stride = cfg.simulate.dist_sample_dt;
            const double k = t / stride;
            if (std::abs(k - std::round(k)) < 1e-9) {
                LyapunovPerron fib(model, path, t, params);
                row.push_back(fmt_g(fib.dist_to_manifold(u).distance));
            } else {
                row.push_back("");
            }
        }
        tab.rows.push_back(std::move(row));
    }
    rep.tables.push_back(std::move(tab));

    if (cfg.simulate.with_reduced) {
        ReducedOptions ropts;
        ropts.mode = cfg.simulate.reduced_mode == "exact-lp" ? ReducedMode::ExactLP
                                                             : ReducedMode::Quadratic;
        ropts.window_T = cfg.grids.window_T;
        ropts.lambda = cfg.dynamics.lambda;
        ropts.eta = cfg.dynamics.eta;
        ropts.tol = cfg.solver.tol;
        const Trajectory red = integrate_reduced(model, path, u0[0] * std::exp(-z0), t_end,
                                                 cfg.grids.dt, cfg.dynamics.nu, ropts);
        CsvTable rtab;
        rtab.name = "reduced";
        rtab.header = {"t", "a_v", "u1"};
        for (std::size_t i = 0; i <= red.grid.n_steps; ++i) {
            const double z = path.z_at(red.grid.t(i));
            rtab.rows.push_back({fmt_g(red.grid.t(i)),
                                 fmt_g(red.states(static_cast<Eigen::Index>(i), 0)),
                                 fmt_g(std::exp(z) * red.states(static_cast<Eigen::Index>(i), 0))});
        }
        rep.tables.push_back(std::move(rtab));
    }

    if (cfg.simulate.with_amplitude) {
        const double eps = cfg.dynamics.sigma;
        if (eps <= 0.0)
            throw ConfigError("simulate: with_amplitude requires sigma > 0 (eps scaling)");
        const std::size_t i0 = path.grid.index_of(0.0);
        std::vector<double> w_slow(vtraj.grid.n_steps + 1);
        for (std::size_t i = 0; i < w_slow.size(); ++i) w_slow[i] = eps * path.w[i0 + i];
        const double nu0 = cfg.dynamics.nu / (eps * eps);
        const std::vector<double> amp =
            integrate_amplitude(nu0, u0[0] / eps, w_slow, eps * eps * cfg.grids.dt);
        CsvTable atab;
        atab.name = "amplitude";
        atab.header = {"T_slow", "a", "eps_a"};
        for (std::size_t i = 0; i < amp.size(); ++i)
            atab.rows.push_back({fmt_g(eps * eps * vtraj.grid.t(i)), fmt_g(amp[i]),
                                 fmt_g(eps * amp[i])});
        rep.tables.push_back(std::move(atab));
    }

    {
        CsvTable ptab;
        ptab.name = "path";
        ptab.header = {"t", "w", "z"};
        for (std::size_t i = 0; i < path.grid.n_nodes(); ++i)
            ptab.rows.push_back({fmt_g(path.grid.t(i)), fmt_g(path.w[i]), fmt_g(path.z[i])});
        rep.tables.push_back(std::move(ptab));
    }

    rep.summary["t_end"] = t_end;
    rep.summary["final_norm_u"] = model.norm(utraj.at(utraj.grid.n_steps));
    rep.passed = true;
    return rep;
}

ExperimentReport run_experiment(const std::string& name, const ExperimentConfig& cfg,
                                unsigned threads) {
    if (name == "shape") return run_shape(cfg, threads);
    if (name == "attract") return run_attraction(cfg, threads);
    if (name == "cone") return run_cone(cfg, threads);
    if (name == "ktail") return run_ktail(cfg, threads);
    if (name == "amplitude") return run_amplitude(cfg, threads);
    if (name == "simulate") return run_simulate(cfg, threads);
    throw ConfigError("unknown experiment '" + name +
                      "' (expected shape|attract|cone|ktail|amplitude|simulate)");
}

}  // namespace rim

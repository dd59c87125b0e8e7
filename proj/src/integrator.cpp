#include "rim/integrator.hpp"

#include <cmath>

#include "rim/lyapunov_perron.hpp"

namespace rim {

namespace {

std::size_t path_stride(const NoisePath& path, double dt) {
    const double r = dt / path.grid.dt;
    const auto m = static_cast<std::size_t>(std::llround(r));
    if (m == 0 || std::abs(r - static_cast<double>(m)) > 1e-9 * (1.0 + r))
        throw std::invalid_argument("integrate: dt must be an integer multiple of the path step");
    return m;
}

}  // namespace

Trajectory integrate_v(const SpectralModel& model, const NoisePath& path, double t_begin,
                       const StateVector& v0, double t_end, double dt, double nu,
                       const IntegrateOptions& opts) {
    if (!v0.allFinite()) throw std::invalid_argument("integrate_v: v0 must be finite");
    const std::size_t stride = path_stride(path, dt);
    const std::size_t i_begin = path.grid.index_of(t_begin);
    const double steps = (t_end - t_begin) / dt;
    const auto n_steps = static_cast<std::size_t>(std::llround(steps));
    if (std::abs(steps - static_cast<double>(n_steps)) > 1e-9 * (1.0 + steps))
        throw std::invalid_argument("integrate_v: (t_end - t_begin) must be a multiple of dt");
    if (i_begin + n_steps * stride > path.grid.n_steps)
        throw std::out_of_range("integrate_v: path does not cover [t_begin, t_end]");

    const auto n = static_cast<Eigen::Index>(model.n_total());
    const auto& lam = model.eigenvalues();
    Trajectory traj;
    traj.grid = TimeGrid(t_begin, dt, n_steps);
    traj.frame = Frame::V;
    traj.states.resize(static_cast<Eigen::Index>(n_steps + 1), n);
    StateVector v = v0;
    traj.states.row(0) = v.transpose();

    StateVector e_step(n), n0(n), n1(n), vp(n);
    for (std::size_t s = 0; s < n_steps; ++s) {
        const std::size_t ia = i_begin + s * stride;
        const std::size_t ib = ia + stride;
        const double za = path.z[ia], zb = path.z[ib];
        const double dz_int = path.zint[ib] - path.zint[ia];
        for (Eigen::Index k = 0; k < n; ++k)
            e_step[k] = std::exp((-lam[k] + nu) * dt + dz_int);
        if (opts.cutoff) {
            n0 = std::exp(-za) * model.apply_b_cutoff(std::exp(za) * v);
        } else {
            n0 = std::exp(za) * model.apply_b(v, v);
        }
        vp = e_step.cwiseProduct(v + dt * n0);
        if (opts.corrector) {
            if (opts.cutoff) {
                n1 = std::exp(-zb) * model.apply_b_cutoff(std::exp(zb) * vp);
            } else {
                n1 = std::exp(zb) * model.apply_b(vp, vp);
            }
            v = e_step.cwiseProduct(v) + 0.5 * dt * (e_step.cwiseProduct(n0) + n1);
        } else {
            v = vp;
        }
        if (model.norm(v) > opts.blowup_guard)
            throw BlowUpError(t_begin + static_cast<double>(s + 1) * dt);
        traj.states.row(static_cast<Eigen::Index>(s + 1)) = v.transpose();
    }
    return traj;
}

namespace {
Trajectory reframe(const Trajectory& traj, const NoisePath& path, Frame target) {
    if (traj.frame == target) return traj;
    Trajectory out = traj;
    out.frame = target;
    for (std::size_t i = 0; i <= traj.grid.n_steps; ++i) {
        const double z = path.z_at(traj.grid.t(i));
        const double f = (target == Frame::U) ? std::exp(z) : std::exp(-z);
        out.states.row(static_cast<Eigen::Index>(i)) *= f;
    }
    return out;
}

/// Catmull-Rom interpolation on a uniform grid of StateVectors.
StateVector interp_cubic(const std::vector<double>& xs,
                         const std::vector<StateVector>& ys, double x) {
    const std::size_t n = xs.size();
    const double h = xs[1] - xs[0];
    double pos = (x - xs[0]) / h;
    pos = std::clamp(pos, 0.0, static_cast<double>(n - 1));
    auto i = static_cast<std::size_t>(pos);
    if (i >= n - 1) i = n - 2;
    const double t = pos - static_cast<double>(i);
    const StateVector& p1 = ys[i];
    const StateVector& p2 = ys[i + 1];
    const StateVector& p0 = ys[i > 0 ? i - 1 : i];
    const StateVector& p3 = ys[i + 2 < n ? i + 2 : i + 1];
    // one-sided fallbacks at the ends reduce to quadratic/linear blends
    return 0.5 * ((2.0 * p1) + (-p0 + p2) * t + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * (t * t) +
                  (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * (t * t * t));
}
}  // namespace

Trajectory to_u(const Trajectory& traj, const NoisePath& path) {
    return reframe(traj, path, Frame::U);
}
Trajectory to_v(const Trajectory& traj, const NoisePath& path) {
    return reframe(traj, path, Frame::V);
}

Trajectory integrate_reduced(const SpectralModel& model, const NoisePath& path, double a0,
                             double t_end, double dt, double nu,
                             const ReducedOptions& opts) {
    if (model.n_c() != 1)
        throw std::logic_error("integrate_reduced: only n_c = 1 is supported");
    const std::size_t stride = path_stride(path, dt);
    const std::size_t i_begin = path.grid.index_of(0.0);
    const auto n_steps = static_cast<std::size_t>(std::llround(t_end / dt));
    const auto n = static_cast<Eigen::Index>(model.n_total());

    // h(theta_t omega, a e_1) in v coordinates, as a function of (path node, a)
    std::function<StateVector(std::size_t, double)> slave;

    struct LpNode {
        double t = 0.0;
        std::vector<double> agrid;
        std::vector<StateVector> h;
    };
    std::vector<LpNode> lp_nodes;
    if (opts.mode == ReducedMode::Quadratic) {
        slave = [&model, &path, n](std::size_t ipath, double a) {
            StateVector xi = StateVector::Zero(n);
            xi[0] = a;
            return StateVector(std::exp(path.z[ipath]) * model.ls_inverse_bs(xi));
        };
    } else {
        const double chart = 2.0 * model.r_cut();
        const int n_agrid = 9;
        LyapunovPerron::Params lp;
        lp.nu = nu;
        lp.eta = opts.eta;
        lp.lambda = opts.lambda;
        lp.window_T = opts.window_T;
        lp.tol = opts.tol;
        const auto refresh_steps =
            static_cast<std::size_t>(std::llround(opts.h_refresh / dt));
        if (refresh_steps == 0)
            throw std::invalid_argument("integrate_reduced: h_refresh must be >= dt");
        for (std::size_t s = 0;; s += refresh_steps) {
            const double t = std::min(static_cast<double>(s) * dt, t_end);
            LyapunovPerron fib(model, path, t, lp);
            LpNode node;
            node.t = t;
            for (int g = 0; g < n_agrid; ++g) {
                const double a =
                    -chart + 2.0 * chart * static_cast<double>(g) / (n_agrid - 1);
                StateVector xi = StateVector::Zero(n);
                xi[0] = a;
                node.agrid.push_back(a);
                node.h.push_back(fib.h_of(xi));
            }
            lp_nodes.push_back(std::move(node));
            if (t >= t_end) break;
        }
        slave = [&model, &path, lp_nodes = std::move(lp_nodes),
                 i_begin](std::size_t ipath, double a) {
            const double t = path.grid.dt * static_cast<double>(ipath - i_begin);
            std::size_t j = 0;
            while (j + 2 < lp_nodes.size() && lp_nodes[j + 1].t < t) ++j;
            const auto& n0 = lp_nodes[j];
            const auto& n1 = lp_nodes[std::min(j + 1, lp_nodes.size() - 1)];
            const double span = n1.t - n0.t;
            const double th = span > 0.0 ? std::clamp((t - n0.t) / span, 0.0, 1.0) : 0.0;
            StateVector h0 = interp_cubic(n0.agrid, n0.h, a);
            StateVector h1 = interp_cubic(n1.agrid, n1.h, a);
            return StateVector((1.0 - th) * h0 + th * h1);
        };
    }

    Trajectory traj;
    traj.grid = TimeGrid(0.0, dt, n_steps);
    traj.frame = Frame::V;
    traj.states.resize(static_cast<Eigen::Index>(n_steps + 1), n);
    double a = a0;
    const auto fill_row = [&](std::size_t srow, std::size_t ipath, double aval) {
        StateVector full = slave(ipath, aval);
        full[0] = aval;
        traj.states.row(static_cast<Eigen::Index>(srow)) = full.transpose();
    };
    // c-mode drift in v coordinates (lambda_1 = 0 on the kernel)
    const auto rhs = [&](std::size_t ipath, double aval) {
        const double z = path.z[ipath];
        StateVector vfull = slave(ipath, aval);
        vfull[0] = aval;
        const StateVector u = std::exp(z) * vfull;
        const StateVector b = model.apply_b_cutoff(u);
        return std::exp(-z) * b[0];
    };
    fill_row(0, i_begin, a);
    for (std::size_t s = 0; s < n_steps; ++s) {
        const std::size_t ia = i_begin + s * stride;
        const std::size_t ib = ia + stride;
        const double dz_int = path.zint[ib] - path.zint[ia];
        const double e_step = std::exp(nu * dt + dz_int);
        const double n0 = rhs(ia, a);
        const double ap = e_step * (a + dt * n0);
        if (opts.corrector) {
            const double n1 = rhs(ib, ap);
            a = e_step * a + 0.5 * dt * (e_step * n0 + n1);
        } else {
            a = ap;
        }
        fill_row(s + 1, ib, a);
    }
    return traj;
}

std::vector<double> integrate_amplitude(double nu0, double a0,
                                        const std::vector<double>& w_slow, double dT) {
    std::vector<double> out;
    out.reserve(w_slow.size());
    out.push_back(a0);
    double a = a0;
    const auto f = [nu0](double x) { return nu0 * x - x * x * x / 12.0; };
    for (std::size_t i = 0; i + 1 < w_slow.size(); ++i) {
        const double dw = w_slow[i + 1] - w_slow[i];
        const double astar = a + f(a) * dT + a * dw;
        a = a + 0.5 * (f(a) + f(astar)) * dT + 0.5 * (a + astar) * dw;
        out.push_back(a);
    }
    return out;
}

}  // namespace rim

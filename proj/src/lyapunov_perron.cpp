#include "rim/lyapunov_perron.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace rim {

namespace {

/// (e^x - 1)/x, stable near 0.
double phi1(double x) {
    if (std::abs(x) < 1e-5) return 1.0 + 0.5 * x + x * x / 6.0;
    return std::expm1(x) / x;
}

/// Brent scalar minimisation on [lo, hi] to absolute tolerance xtol.
template <typename F>
double brent_min(F&& f, double lo, double hi, double xtol, int max_iter, double* fmin) {
    const double gold = 0.3819660112501051;
    double a = lo, b = hi;
    double x = a + gold * (b - a), w = x, v = x;
    double fx = f(x), fw = fx, fv = fx;
    double d = 0.0, e = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        const double xm = 0.5 * (a + b);
        const double tol1 = xtol;
        if (std::abs(x - xm) <= 2.0 * tol1 - 0.5 * (b - a)) break;
        bool parab = false;
        if (std::abs(e) > tol1) {
            const double r = (x - w) * (fx - fv);
            double q = (x - v) * (fx - fw);
            double p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if (q > 0.0) p = -p;
            q = std::abs(q);
            const double etmp = e;
            e = d;
            if (std::abs(p) < std::abs(0.5 * q * etmp) && p > q * (a - x) && p < q * (b - x)) {
                parab = true;
                d = p / q;
                const double u = x + d;
                if (u - a < 2.0 * tol1 || b - u < 2.0 * tol1)
                    d = (xm - x >= 0.0) ? tol1 : -tol1;
            }
        }
        if (!parab) {
            e = (x >= xm) ? a - x : b - x;
            d = gold * e;
        }
        const double u = (std::abs(d) >= tol1) ? x + d : x + ((d >= 0.0) ? tol1 : -tol1);
        const double fu = f(u);
        if (fu <= fx) {
            if (u >= x) a = x; else b = x;
            v = w; fv = fw;
            w = x; fw = fx;
            x = u; fx = fu;
        } else {
            if (u < x) a = u; else b = u;
            if (fu <= fw || w == x) {
                v = w; fv = fw;
                w = u; fw = fu;
            } else if (fu <= fv || v == x || v == w) {
                v = u; fv = fu;
            }
        }
    }
    if (fmin) *fmin = fx;
    return x;
}

}  // namespace

LyapunovPerron::LyapunovPerron(const SpectralModel& model, const NoisePath& path,
                               double t_fiber, const Params& params)
    : model_(&model), params_(params) {
    if (params.require_contraction) {
        // delta does not enter condition (1); any positive value works here
        const auto rep = model.check_conditions(params.nu, params.eta, 1.0, params.lambda);
        if (!rep.cond1_ok)
            throw std::invalid_argument(
                "LyapunovPerron: condition (1) fails, operator is not certified contracting");
    }
    dt_ = path.grid.dt;
    const double steps = params.window_T / dt_;
    m_ = static_cast<std::size_t>(std::llround(steps));
    if (std::abs(steps - static_cast<double>(m_)) > 1e-9 * (1.0 + steps))
        throw std::invalid_argument("LyapunovPerron: window_T must be a multiple of dt");
    const std::size_t ic = path.grid.index_of(t_fiber);
    if (ic < m_)
        throw std::out_of_range("LyapunovPerron: path history shorter than the window");

    const auto n = static_cast<Eigen::Index>(model.n_total());
    const std::size_t nn = m_ + 1;
    z_.resize(nn);
    zrel_.resize(nn);
    t_.resize(nn);
    wnorm_.resize(nn);
    ez_.resize(nn);
    emz_.resize(nn);
    for (std::size_t j = 0; j < nn; ++j) {
        const std::size_t ip = ic - m_ + j;
        z_[j] = path.z[ip];
        zrel_[j] = path.zint[ip] - path.zint[ic];
        t_[j] = -params.window_T + static_cast<double>(j) * dt_;
        wnorm_[j] = std::exp(params.eta * t_[j] - zrel_[j]);
        ez_[j] = std::exp(z_[j]);
        emz_[j] = std::exp(-z_[j]);
    }
    const auto& lam = model.eigenvalues();
    ks_.resize(static_cast<Eigen::Index>(m_), n);
    phis_.resize(static_cast<Eigen::Index>(m_), n);
    kc_.resize(m_);
    phic_.resize(m_);
    envc_.resize(nn);
    for (std::size_t j = 0; j < m_; ++j) {
        const double dz = zrel_[j + 1] - zrel_[j];
        for (Eigen::Index k = 0; k < n; ++k) {
            const double b = (-lam[k] + params.nu) * dt_ + dz;
            ks_(static_cast<Eigen::Index>(j), k) = std::exp(b);
            phis_(static_cast<Eigen::Index>(j), k) = dt_ * phi1(b);
        }
        const double bc = -(params.nu * dt_ + dz);
        kc_[j] = std::exp(bc);
        phic_[j] = dt_ * phi1(bc);
    }
    for (std::size_t j = 0; j < nn; ++j)
        envc_[j] = std::exp(params.nu * t_[j] + zrel_[j]);
}

double LyapunovPerron::cnorm(const HistoryFunction& v) const {
    double best = 0.0;
    for (std::size_t j = 0; j <= m_; ++j) {
        const double nrm = model_->norm(v.values.row(static_cast<Eigen::Index>(j)).transpose());
        best = std::max(best, wnorm_[j] * nrm);
    }
    return best;
}

HistoryFunction LyapunovPerron::zero_history() const {
    HistoryFunction h;
    h.eta = params_.eta;
    h.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m_ + 1),
                                     static_cast<Eigen::Index>(model_->n_total()));
    return h;
}

StateVector LyapunovPerron::nonlin(const StateVector& v, double z, bool cutoff) const {
    const double ez = std::exp(z);
    const StateVector u = ez * v;
    if (cutoff) return std::exp(-z) * model_->apply_b_cutoff(u);
    return std::exp(-z) * model_->apply_b(u, u);
}

void LyapunovPerron::eval_nonlin_rows(const Eigen::MatrixXd& v, Eigen::MatrixXd& g,
                                      bool cutoff) const {
    const auto n = static_cast<Eigen::Index>(model_->n_total());
    StateVector tmp(n);
    for (std::size_t j = 0; j <= m_; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        tmp = ez_[j] * v.row(jj).transpose();
        StateVector w = cutoff ? model_->apply_b_cutoff(tmp)
                               : model_->apply_b(tmp, tmp);
        g.row(jj) = emz_[j] * w.transpose();
    }
}

HistoryFunction LyapunovPerron::apply_T(const HistoryFunction& v, const StateVector& xi,
                                        bool cutoff) const {
    const auto n = static_cast<Eigen::Index>(model_->n_total());
    const auto nc = static_cast<Eigen::Index>(model_->n_c());
    HistoryFunction out = zero_history();
    Eigen::MatrixXd g(static_cast<Eigen::Index>(m_ + 1), n);
    eval_nonlin_rows(v.values, g, cutoff);

    // s-part: forward sweep of the truncated (-inf, t] integral
    StateVector s = StateVector::Zero(n);
    for (std::size_t j = 0; j < m_; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        for (Eigen::Index k = nc; k < n; ++k) {
            const double gbar = 0.5 * (g(jj, k) + g(jj + 1, k));
            s[k] = ks_(jj, k) * s[k] + phis_(jj, k) * gbar;
        }
        out.values.row(jj + 1).tail(n - nc) = s.tail(n - nc).transpose();
    }
    // c-part: backward sweep of int_0^t
    Eigen::VectorXd c = Eigen::VectorXd::Zero(nc);
    out.values.row(static_cast<Eigen::Index>(m_)).head(nc) +=
        envc_[m_] * xi.head(nc).transpose();
    for (std::size_t j = m_; j > 0; --j) {
        const auto jj = static_cast<Eigen::Index>(j - 1);
        Eigen::VectorXd gbar = 0.5 * (g.row(jj).head(nc) + g.row(jj + 1).head(nc));
        c = kc_[j - 1] * c - phic_[j - 1] * gbar;
        out.values.row(jj).head(nc) += envc_[j - 1] * xi.head(nc).transpose() + c.transpose();
    }
    return out;
}

ManifoldSample LyapunovPerron::solve_fixed_point(const StateVector& xi) const {
    ManifoldSample sample;
    sample.xi = xi;
    HistoryFunction v = apply_T(zero_history(), xi);
    double prev_res = -1.0;
    double q = 0.5;
    double res = 0.0;
    std::array<double, 3> last_ratios{0.0, 0.0, 0.0};
    int n_ratios = 0;
    int it = 0;
    for (; it < params_.max_iter; ++it) {
        HistoryFunction vn = apply_T(v, xi);
        HistoryFunction diff = vn;
        diff.values -= v.values;
        res = cnorm(diff);
        if (prev_res > 0.0) {
            last_ratios[n_ratios % 3] = res / prev_res;
            ++n_ratios;
            q = *std::max_element(last_ratios.begin(),
                                  last_ratios.begin() + std::min(n_ratios, 3));
            q = std::clamp(q, 1e-6, 0.999999);
        }
        prev_res = res;
        v = std::move(vn);
        if (res < params_.tol * (1.0 - q) / q) break;
    }
    if (it >= params_.max_iter) throw IterationError(res, it);
    sample.iteration_count = it + 1;
    sample.contraction_estimate = q;
    sample.v_star = std::move(v);
    StateVector v0 = sample.v_star.values.row(static_cast<Eigen::Index>(m_)).transpose();
    sample.h = model_->project_s(v0);
    sample.quad_pred = model_->ls_inverse_bs(xi);
    sample.out_of_hypothesis = model_->norm(xi) * std::exp(z0()) > model_->r_cut();
    // C^-_eta norms of v* and its s-part
    double nv = 0.0, nvs = 0.0;
    for (std::size_t j = 0; j <= m_; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        StateVector row = sample.v_star.values.row(jj).transpose();
        nv = std::max(nv, wnorm_[j] * model_->norm(row));
        nvs = std::max(nvs, wnorm_[j] * model_->norm(model_->project_s(row)));
    }
    sample.norm_v_ceta = nv;
    sample.norm_vs_ceta = nvs;
    compute_g_chain(sample);
    return sample;
}

void LyapunovPerron::compute_g_chain(ManifoldSample& sample) const {
    const auto n = static_cast<Eigen::Index>(model_->n_total());
    const auto nc = static_cast<Eigen::Index>(model_->n_c());
    const auto& lam = model_->eigenvalues();
    const std::size_t nn = m_ + 1;
    const StateVector& xi = sample.xi;

    // cut-off factor along the fixed point and the c-part trajectory
    std::vector<double> chi(nn);
    Eigen::MatrixXd vc = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nn), n);
    for (std::size_t j = 0; j < nn; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        StateVector row = sample.v_star.values.row(jj).transpose();
        chi[j] = model_->chi_at(ez_[j] * row);
        vc.row(jj).head(nc) = row.head(nc).transpose();
    }

    // g1*(t): same kernel as the s-part of T, integrand chi* B_s(vc,vc) e^z
    Eigen::MatrixXd g1traj =
        Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nn), n);
    {
        Eigen::MatrixXd f(static_cast<Eigen::Index>(nn), n);
        for (std::size_t j = 0; j < nn; ++j) {
            const auto jj = static_cast<Eigen::Index>(j);
            StateVector c = vc.row(jj).transpose();
            f.row(jj) = (chi[j] * ez_[j]) * model_->apply_b(c, c).transpose();
        }
        StateVector s = StateVector::Zero(n);
        for (std::size_t j = 0; j < m_; ++j) {
            const auto jj = static_cast<Eigen::Index>(j);
            for (Eigen::Index k = nc; k < n; ++k) {
                const double fbar = 0.5 * (f(jj, k) + f(jj + 1, k));
                s[k] = ks_(jj, k) * s[k] + phis_(jj, k) * fbar;
            }
            g1traj.row(jj + 1).tail(n - nc) = s.tail(n - nc).transpose();
        }
    }
    sample.g1 = g1traj.row(static_cast<Eigen::Index>(m_)).transpose();

    // ||v_s* - g1*|| in the history norm feeds the quadratic-in-R lemma check
    double nvsg1 = 0.0;
    for (std::size_t j = 0; j < nn; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        StateVector d = model_->project_s(sample.v_star.values.row(jj).transpose()) -
                        g1traj.row(jj).transpose();
        nvsg1 = std::max(nvsg1, wnorm_[j] * model_->norm(d));
    }
    sample.vs_minus_g1_ceta = nvsg1;
    sample.stage_err[0] = model_->norm(sample.h - sample.g1);

    // interval weights for the plain e^{L_s tau} kernel at t = 0
    const auto kernel_weight = [&](Eigen::Index k, std::size_t j) {
        // int_{t_j}^{t_{j+1}} e^{lam_k tau} dtau, tau <= 0
        const double lk = lam[k];
        if (lk < 1e-14) return dt_;
        return std::exp(lk * t_[j + 1]) * (-std::expm1(-lk * dt_)) / lk;
    };

    // g2* = int e^{Ls tau} chi* B_s(xi, vc) e^z
    sample.g2 = StateVector::Zero(n);
    {
        Eigen::MatrixXd f(static_cast<Eigen::Index>(nn), n);
        for (std::size_t j = 0; j < nn; ++j) {
            const auto jj = static_cast<Eigen::Index>(j);
            StateVector c = vc.row(jj).transpose();
            f.row(jj) = (chi[j] * ez_[j]) * model_->apply_b(xi, c).transpose();
        }
        for (Eigen::Index k = nc; k < n; ++k) {
            double acc = 0.0;
            for (std::size_t j = 0; j < m_; ++j)
                acc += kernel_weight(k, j) *
                       0.5 * (f(static_cast<Eigen::Index>(j), k) +
                              f(static_cast<Eigen::Index>(j + 1), k));
            sample.g2[k] = acc;
        }
    }

    // g3* = [int e^{Ls tau} chi* e^{z} e^{nu tau} e^{int_0^tau z}] B_s(xi,xi)
    sample.g3 = StateVector::Zero(n);
    {
        std::vector<double> scal(nn);
        for (std::size_t j = 0; j < nn; ++j)
            scal[j] = chi[j] * ez_[j] * std::exp(params_.nu * t_[j] + zrel_[j]);
        StateVector bs = model_->project_s(model_->apply_b(xi, xi));
        for (Eigen::Index k = nc; k < n; ++k) {
            double acc = 0.0;
            for (std::size_t j = 0; j < m_; ++j)
                acc += kernel_weight(k, j) * 0.5 * (scal[j] + scal[j + 1]);
            sample.g3[k] = acc * bs[k];
        }
    }

    sample.stage_err[1] = model_->norm(sample.g1 - sample.g2);
    sample.stage_err[2] = model_->norm(sample.g2 - sample.g3);
    sample.stage_err[3] =
        model_->norm(sample.g3 - std::exp(z0()) * sample.quad_pred);
}

StateVector LyapunovPerron::h_of(const StateVector& xi) const {
    return solve_fixed_point(xi).h;
}

StateVector LyapunovPerron::psi_graph(const StateVector& xi) const {
    const double ez0 = std::exp(z0());
    return ez0 * h_of(xi / ez0);
}

StateVector LyapunovPerron::psi_cached(double a) const {
    const long long key = std::llround(a * 1e12);
    auto it = psi_cache_.find(key);
    if (it != psi_cache_.end()) return it->second;
    StateVector xi = StateVector::Zero(static_cast<Eigen::Index>(model_->n_total()));
    xi[0] = a;
    StateVector val = psi_graph(xi);
    psi_cache_.emplace(key, val);
    return val;
}

DistanceResult LyapunovPerron::dist_to_manifold(const StateVector& u) const {
    if (model_->n_c() != 1)
        throw std::logic_error("dist_to_manifold: only scalar (n_c = 1) charts are supported");
    const double chart = 2.0 * model_->r_cut();
    DistanceResult out;
    int solves = 0;
    const auto f = [&](double a) {
        const std::size_t before = psi_cache_.size();
        StateVector cand = psi_cached(a);
        cand[0] += a;
        if (psi_cache_.size() != before) ++solves;
        return model_->norm(u - cand);
    };
    const double a0 = std::clamp(u[0], -chart, chart);
    const double d0 = f(a0);
    // the graph point at a0 caps the distance; minimiser satisfies
    // sqrt(mass)|a - a0| <= d0
    const double w = d0 / std::sqrt(model_->mass()) + 1e-12;
    const double lo = std::max(-chart, a0 - w);
    const double hi = std::min(chart, a0 + w);
    double fmin = 0.0;
    double amin = brent_min(f, lo, hi, 1e-8, 200, &fmin);
    if (d0 <= fmin) {  // a0 may sit at the bracket edge, keep the better point
        amin = a0;
        fmin = d0;
    }
    out.distance = fmin;
    out.argmin_xi = amin;
    out.at_boundary = std::abs(std::abs(amin) - chart) <= 1e-6;
    out.solves = solves;
    return out;
}

}  // namespace rim

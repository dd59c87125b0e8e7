#include "rim/spectral_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "rim/format.hpp"
#include "rim/rng.hpp"

namespace rim {

SpectralModel SpectralModel::burgers(std::size_t n_total, double alpha, double r_cut) {
    if (n_total < 3) throw std::invalid_argument("burgers: n_total must be >= 3");
    const int n = static_cast<int>(n_total);
    Eigen::VectorXd lam(n);
    for (int k = 1; k <= n; ++k) lam[k - 1] = static_cast<double>(k) * k - 1.0;
    // B(sin jx, sin kx) = 1/4 [ (j+k) sin((j+k)x) - (j-k) sin((j-k)x) ]
    std::vector<BEntry> entries;
    for (int j = 1; j <= n; ++j) {
        for (int k = j; k <= n; ++k) {
            if (j + k <= n) entries.push_back({j, k, j + k, 0.25 * (j + k)});
            if (k != j) entries.push_back({j, k, k - j, -0.25 * (k - j)});
        }
    }
    return diagonal(std::move(lam), 1, std::move(entries), std::numbers::pi / 2.0, alpha,
                    r_cut);
}

SpectralModel SpectralModel::diagonal(Eigen::VectorXd lambda, std::size_t n_c,
                                      std::vector<BEntry> entries, double mass,
                                      double alpha, double r_cut) {
    if (alpha <= 0.0 || alpha >= 1.0)
        throw std::invalid_argument("SpectralModel: alpha must lie in (0,1)");
    for (Eigen::Index i = 0; i + 1 < lambda.size(); ++i)
        if (lambda[i] > lambda[i + 1])
            throw std::invalid_argument("SpectralModel: eigenvalues must be nondecreasing");
    for (std::size_t i = 0; i < n_c; ++i)
        if (lambda[static_cast<Eigen::Index>(i)] != 0.0)
            throw std::invalid_argument("SpectralModel: kernel eigenvalues must be 0");
    if (static_cast<Eigen::Index>(n_c) >= lambda.size() ||
        lambda[static_cast<Eigen::Index>(n_c)] <= 0.0)
        throw std::invalid_argument("SpectralModel: lambda_* must be positive");
    SpectralModel m;
    m.lambda_ = std::move(lambda);
    m.n_c_ = n_c;
    m.entries_ = std::move(entries);
    m.mass_ = mass;
    m.alpha_ = alpha;
    m.r_cut_ = r_cut;
    m.c_b_ = m.entries_.empty() ? 0.0 : m.compute_cb();
    return m;
}

double SpectralModel::norm(const StateVector& u, double order) const {
    if (u.size() != lambda_.size())
        throw std::invalid_argument("SpectralModel::norm: dimension mismatch");
    if (order == 0.0) return std::sqrt(mass_) * u.norm();
    double acc = 0.0;
    for (Eigen::Index k = 0; k < u.size(); ++k)
        acc += std::pow(1.0 + lambda_[k], order) * u[k] * u[k];
    return std::sqrt(mass_ * acc);
}

StateVector SpectralModel::project_c(const StateVector& u) const {
    StateVector out = StateVector::Zero(u.size());
    out.head(static_cast<Eigen::Index>(n_c_)) = u.head(static_cast<Eigen::Index>(n_c_));
    return out;
}

StateVector SpectralModel::project_s(const StateVector& u) const {
    StateVector out = u;
    out.head(static_cast<Eigen::Index>(n_c_)).setZero();
    return out;
}

StateVector SpectralModel::apply_b(const StateVector& u, const StateVector& v) const {
    const auto n = lambda_.size();
    if (u.size() != n || v.size() != n)
        throw std::invalid_argument("apply_b: dimension mismatch");
    StateVector w = StateVector::Zero(n);
    for (const auto& e : entries_) {
        const int j = e.j - 1, k = e.k - 1, l = e.l - 1;
        if (e.j == e.k)
            w[l] += e.v * u[j] * v[j];
        else
            w[l] += e.v * (u[j] * v[k] + u[k] * v[j]);
    }
    return w;
}

double SpectralModel::chi(double r) {
    if (r <= 1.0) return 1.0;
    if (r >= 2.0) return 0.0;
    const double x = r - 1.0;
    return 1.0 - x * x * x * (10.0 + x * (-15.0 + 6.0 * x));
}

double SpectralModel::chi_at(const StateVector& u) const {
    if (r_cut_ <= 0.0) return 0.0;  // radius-0 cut-off kills the nonlinearity
    return chi(norm(u) / r_cut_);
}

StateVector SpectralModel::apply_b_cutoff(const StateVector& u) const {
    const double c = chi_at(u);
    if (c == 0.0) return StateVector::Zero(u.size());
    return c * apply_b(u, u);
}

StateVector SpectralModel::ls_inverse_bs(const StateVector& xi) const {
    StateVector w = apply_b(xi, xi);
    for (std::size_t kk = 0; kk < n_c_; ++kk) w[static_cast<Eigen::Index>(kk)] = 0.0;
    for (Eigen::Index k = static_cast<Eigen::Index>(n_c_); k < w.size(); ++k)
        w[k] /= lambda_[k];
    return w;
}

double SpectralModel::m_alpha_lambda(double lambda) const {
    if (lambda >= lambda_star())
        throw std::domain_error("m_alpha_lambda: lambda must be < lambda_*");
    const double pref = std::pow(alpha_ / std::numbers::e, alpha_);
    double best = 0.0;
    for (Eigen::Index k = static_cast<Eigen::Index>(n_c_); k < lambda_.size(); ++k) {
        const double gap = lambda_[k] - lambda;
        best = std::max(best, pref * std::pow(gap, -alpha_) *
                                  std::pow(1.0 + lambda_[k], 0.5 * alpha_));
    }
    return best;
}

double SpectralModel::compute_cb(int restarts, int iters, double tol) const {
    const auto n = lambda_.size();
    if (entries_.empty()) return 0.0;
    // normalised output weights: ||w||_{-alpha}^2 = mass * sum wt_l w_l^2
    Eigen::VectorXd sqrt_wt(n);
    for (Eigen::Index l = 0; l < n; ++l)
        sqrt_wt[l] = std::pow(1.0 + lambda_[l], -0.5 * alpha_);

    // A(v)_{lj} = sum_k B_{jkl} v_k, weighted rows
    const auto weighted_map = [&](const Eigen::VectorXd& v) {
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
        for (const auto& e : entries_) {
            const int j = e.j - 1, k = e.k - 1, l = e.l - 1;
            A(l, j) += e.v * v[k];
            if (e.j != e.k) A(l, k) += e.v * v[j];
        }
        return Eigen::MatrixXd(sqrt_wt.asDiagonal() * A);
    };

    Rng rng(0x5eedc0deULL);
    double best = 0.0;
    for (int r = 0; r < restarts; ++r) {
        Eigen::VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.next_normal();
        v.normalize();
        double val = 0.0;
        for (int it = 0; it < iters; ++it) {
            Eigen::MatrixXd A = weighted_map(v);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_u(A.transpose() * A);
            Eigen::VectorXd u = es_u.eigenvectors().col(n - 1);
            Eigen::MatrixXd A2 = weighted_map(u);  // symmetric roles of u and v
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_v(A2.transpose() * A2);
            v = es_v.eigenvectors().col(n - 1);
            const double nv = std::sqrt(es_v.eigenvalues()(n - 1));
            if (std::abs(nv - val) < tol * std::max(1.0, nv)) {
                val = nv;
                break;
            }
            val = nv;
        }
        best = std::max(best, val);
    }
    // Euclidean-normalised value -> H-normalised pair and H^{-alpha} output
    return best / std::sqrt(mass_);
}

ConditionReport SpectralModel::check_conditions(double nu, double eta, double delta,
                                                double lambda) const {
    if (!(eta + nu > 0.0) || !(eta + nu < lambda) || !(lambda < lambda_star()))
        throw std::invalid_argument(
            "check_conditions: need 0 < eta + nu < lambda < lambda_*");
    if (delta <= 0.0) throw std::invalid_argument("check_conditions: delta must be > 0");
    ConditionReport rep;
    rep.c_b = c_b_;
    rep.l_r = 2.0 * r_cut_ * c_b_;
    rep.c_alpha = 1.0;
    rep.m_alpha_lambda = m_alpha_lambda(lambda);
    rep.gamma_1ma = std::tgamma(1.0 - alpha_);
    rep.lambda_star = lambda_star();
    rep.cond1_value =
        rep.l_r * (rep.c_alpha / (eta + nu) +
                   rep.m_alpha_lambda * rep.gamma_1ma / std::pow(lambda - eta - nu, 1.0 - alpha_));
    const double dfac = (1.0 + 1.0 / delta) * (1.0 + 1.0 / delta);
    rep.cond2_lhs = 2.0 * dfac * rep.l_r * rep.l_r + 4.0 * (1.0 + delta) * rep.l_r;
    rep.cond3_lhs = 4.0 * nu + 2.0 * rep.l_r * rep.l_r * dfac;
    rep.cond1_ok = rep.cond1_value < 1.0;
    rep.cond2_ok = rep.cond2_lhs <= rep.lambda_star;
    rep.cond3_ok = rep.cond3_lhs < rep.lambda_star;
    return rep;
}

void SpectralModel::write_tensor_csv(std::ostream& os) const {
    os << "j,k,l,value\n";
    for (const auto& e : entries_)
        os << e.j << ',' << e.k << ',' << e.l << ',' << fmt_g(e.v) << '\n';
}

}  // namespace rim

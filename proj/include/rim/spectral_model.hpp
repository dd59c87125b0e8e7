#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

namespace rim {

/// Coefficients against the model basis (sin(kx) for the Burgers instance,
/// unnormalised; the H inner product carries the mass factor pi/2).
using StateVector = Eigen::VectorXd;

/// Quantitative constants entering the contraction / cone conditions.
struct ConditionReport {
    double c_b = 0.0;
    double l_r = 0.0;         ///< 2*R*C_B
    double c_alpha = 1.0;     ///< = 1 since lambda = 0 on H_c
    double m_alpha_lambda = 0.0;
    double gamma_1ma = 0.0;   ///< Gamma(1-alpha)
    double cond1_value = 0.0; ///< must be < 1
    double cond2_lhs = 0.0;   ///< must be <= lambda_*
    double cond3_lhs = 0.0;   ///< must be <  lambda_*
    double lambda_star = 0.0;
    bool cond1_ok = false;
    bool cond2_ok = false;
    bool cond3_ok = false;
    bool all_ok() const { return cond1_ok && cond2_ok && cond3_ok; }
    /// margins: positive means satisfied, as a fraction of the threshold
    double cond1_margin() const { return 1.0 - cond1_value; }
    double cond2_margin() const { return (lambda_star - cond2_lhs) / lambda_star; }
    double cond3_margin() const { return (lambda_star - cond3_lhs) / lambda_star; }
};

/// Finite Galerkin truncation of the abstract equation:
/// diagonal L with kernel modes first, symmetric bilinear tensor for B,
/// smooth cut-off at radius r_cut, and the interpolation-norm machinery.
class SpectralModel {
public:
    /// One unordered tensor entry: coefficient of <B(e_j,e_k), e_l> with
    /// j <= k; the (k,j) entry is implied by symmetry.
    struct BEntry {
        int j, k, l;
        double v;
    };

    /// Burgers instance on (0, pi): lambda_k = k^2 - 1, B(u,u) = 1/2 (u^2)_x,
    /// products with output mode > n_total truncated.
    static SpectralModel burgers(std::size_t n_total, double alpha = 0.75,
                                 double r_cut = 0.06);

    /// Diagonal model with an explicit spectrum and tensor (empty tensor =
    /// linear model). Used for benchmark configurations and tests.
    static SpectralModel diagonal(Eigen::VectorXd lambda, std::size_t n_c,
                                  std::vector<BEntry> entries, double mass,
                                  double alpha, double r_cut);

    std::size_t n_total() const { return static_cast<std::size_t>(lambda_.size()); }
    std::size_t n_c() const { return n_c_; }
    const Eigen::VectorXd& eigenvalues() const { return lambda_; }
    double lambda_star() const { return lambda_[static_cast<Eigen::Index>(n_c_)]; }
    double mass() const { return mass_; }
    double alpha() const { return alpha_; }
    double r_cut() const { return r_cut_; }
    double c_b() const { return c_b_; }
    const std::vector<BEntry>& b_entries() const { return entries_; }

    /// Weighted l2 norm with mode weights (1+lambda_k)^order.
    double norm(const StateVector& u, double order = 0.0) const;

    StateVector project_c(const StateVector& u) const;
    StateVector project_s(const StateVector& u) const;

    /// w_l = sum_{jk} B_{jkl} u_j v_k (symmetric in u, v).
    StateVector apply_b(const StateVector& u, const StateVector& v) const;

    /// chi(||u||/R) * B(u,u); equals B(u,u) for ||u|| <= R, zero beyond 2R.
    StateVector apply_b_cutoff(const StateVector& u) const;

    /// Value of the cut-off profile at state u.
    double chi_at(const StateVector& u) const;

    /// Quintic-smoothstep profile chi(r): 1 on r<=1, 0 on r>=2, C^2 seams.
    static double chi(double r);

    /// P_s B(xi,xi) with each s-mode divided by its eigenvalue
    /// (the quadratic manifold prediction).
    StateVector ls_inverse_bs(const StateVector& xi) const;

    /// sup over s-modes and t>0 of e^{-(lambda_k - lambda) t} t^alpha
    /// (1+lambda_k)^{alpha/2}; per-mode maximiser t* = alpha/(lambda_k-lambda).
    double m_alpha_lambda(double lambda) const;

    /// Operator norm of B : H x H -> H^{-alpha}, by alternating
    /// singular-vector iteration over the finite tensor with random restarts.
    double compute_cb(int restarts = 24, int iters = 200, double tol = 1e-12) const;

    /// Evaluate conditions (1)-(3) for the given parameters.
    /// Requires 0 < eta + nu < lambda < lambda_*; delta > 0.
    ConditionReport check_conditions(double nu, double eta, double delta,
                                     double lambda) const;

    /// Tensor dump, one line per stored entry: j,k,l,value.
    void write_tensor_csv(std::ostream& os) const;

private:
    Eigen::VectorXd lambda_;
    std::size_t n_c_ = 1;
    std::vector<BEntry> entries_;
    double mass_ = 1.0;
    double alpha_ = 0.75;
    double r_cut_ = 0.06;
    double c_b_ = 0.0;
};

}  // namespace rim

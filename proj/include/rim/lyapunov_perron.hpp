#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>

#include "rim/noise_path.hpp"
#include "rim/spectral_model.hpp"

namespace rim {

/// Discretised element of C^-_eta: one state per node of the history
/// window [-T, 0] (matrix row i = value at t_i = -T + i*dt).
struct HistoryFunction {
    Eigen::MatrixXd values;  // (M+1) x n_total
    double eta = 0.0;
};

/// Thrown when the Picard iteration does not reach its tolerance.
struct IterationError : std::runtime_error {
    double last_residual;
    int iterations;
    IterationError(double res, int iters)
        : std::runtime_error("fixed-point iteration did not converge"),
          last_residual(res),
          iterations(iters) {}
};

/// Fixed point of the history-space operator plus diagnostics.
struct ManifoldSample {
    StateVector xi;             ///< H_c argument of h
    HistoryFunction v_star;     ///< fixed point trajectory on [-T, 0]
    StateVector h;              ///< P_s v*(0)
    StateVector quad_pred;      ///< L_s^{-1} B_s(xi, xi)
    StateVector g1, g2, g3;     ///< diagnostic chain at t = 0
    double stage_err[4] = {0, 0, 0, 0};  ///< ||v_s*(0)-g1||, ||g1-g2||, ||g2-g3||,
                                         ///< ||g3 - e^{z0} L_s^{-1}B_s||  (H norms at t=0)
    double vs_minus_g1_ceta = 0.0;  ///< ||v_s* - g1*|| in the weighted history norm
    double norm_vs_ceta = 0.0;  ///< ||v_s*|| in the weighted history norm
    double norm_v_ceta = 0.0;
    int iteration_count = 0;
    double contraction_estimate = 0.0;
    bool out_of_hypothesis = false;  ///< set when ||xi|| e^{z(0)} > R
};

struct DistanceResult {
    double distance = 0.0;
    double argmin_xi = 0.0;   ///< basis coefficient of the minimising xi
    bool at_boundary = false; ///< minimiser pinned at the chart edge
    int solves = 0;
};

/// Lyapunov-Perron machinery on one noise fibre: the history window
/// [t_fiber - T, t_fiber] of a path, with all integral kernels
/// precomputed. Immutable after construction; safe to share read-only.
class LyapunovPerron {
public:
    struct Params {
        double nu = 0.0;
        double eta = 1.0;
        double lambda = 2.5;      ///< analysis rate in (eta+nu, lambda_*)
        double window_T = 40.0;   ///< history truncation length
        double tol = 1e-11;       ///< fixed-point tolerance in the C^-_eta norm
        int max_iter = 400;
        bool require_contraction = true;  ///< verify condition (1) up front
    };

    LyapunovPerron(const SpectralModel& model, const NoisePath& path, double t_fiber,
                   const Params& params);

    const SpectralModel& model() const { return *model_; }
    const Params& params() const { return params_; }
    std::size_t n_nodes() const { return m_ + 1; }
    double z0() const { return z_[m_]; }
    double dt() const { return dt_; }

    /// Weighted sup-norm max_i e^{eta t_i - int_0^{t_i} z} ||v(t_i)||.
    double cnorm(const HistoryFunction& v) const;

    HistoryFunction zero_history() const;

    /// One application of the integral operator T(v, xi).
    HistoryFunction apply_T(const HistoryFunction& v, const StateVector& xi,
                            bool cutoff = true) const;

    /// Picard iteration from v0 = T(0) with the a-posteriori stopping rule
    /// ||v_{n+1}-v_n|| < tol (1-q)/q, q the measured contraction factor.
    ManifoldSample solve_fixed_point(const StateVector& xi) const;

    /// Fill g1*, g2*, g3* and the stage errors on a solved sample.
    void compute_g_chain(ManifoldSample& sample) const;

    /// psi(omega, xi) = e^{z(0)} h(omega, e^{-z(0)} xi).
    StateVector psi_graph(const StateVector& xi) const;

    /// h(omega, xi) alone (P_s of the fixed point at 0).
    StateVector h_of(const StateVector& xi) const;

    /// Distance from u to the graph {xi e_c + psi(xi)} over the chart
    /// ||xi|| <= 2R (scalar bracketed minimisation; requires n_c = 1).
    /// psi values are cached per fibre and reused across calls.
    DistanceResult dist_to_manifold(const StateVector& u) const;

private:
    StateVector nonlin(const StateVector& v, double z, bool cutoff) const;
    void eval_nonlin_rows(const Eigen::MatrixXd& v, Eigen::MatrixXd& g, bool cutoff) const;
    StateVector psi_cached(double a) const;

    const SpectralModel* model_;
    Params params_;
    std::size_t m_ = 0;      // node count - 1
    double dt_ = 0.0;
    std::vector<double> z_;      // z at window nodes
    std::vector<double> zrel_;   // int_{t_fiber}^{t} z (0 at the fibre time)
    std::vector<double> t_;      // history times in [-T, 0]
    std::vector<double> wnorm_;  // C^-_eta weights
    std::vector<double> ez_, emz_;
    Eigen::MatrixXd ks_, phis_;   // s-kernel per interval & mode
    std::vector<double> kc_, phic_;
    std::vector<double> envc_;    // e^{nu t + Z}
    mutable std::map<long long, StateVector> psi_cache_;
};

}  // namespace rim

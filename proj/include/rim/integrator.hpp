#pragma once

#include <Eigen/Dense>
#include <functional>
#include <stdexcept>
#include <vector>

#include "rim/noise_path.hpp"
#include "rim/spectral_model.hpp"

namespace rim {

/// Which coordinates a trajectory is stored in. The two representations
/// are related nodewise by u = e^{z(t)} v.
enum class Frame { V, U };

/// Pathwise solution samples on a forward grid [t0, t0 + n dt].
struct Trajectory {
    TimeGrid grid;            ///< forward time grid (t_start = integration start)
    Eigen::MatrixXd states;   ///< one row per node
    Frame frame = Frame::V;

    StateVector at(std::size_t i) const { return states.row(static_cast<Eigen::Index>(i)).transpose(); }
};

struct BlowUpError : std::runtime_error {
    double t_blowup;
    explicit BlowUpError(double t)
        : std::runtime_error("state norm exceeded the blow-up guard"), t_blowup(t) {}
};

struct IntegrateOptions {
    bool cutoff = true;        ///< integrate the cut-off equation
    bool corrector = true;     ///< exponential midpoint corrector (order 2)
    double blowup_guard = 1e6; ///< abort threshold on ||v|| (no-cutoff runs)
};

/// Integrate the transformed random PDE
///   v' = (-L + nu + z(t)) v + e^{-z} B^(R)(e^z v)        (cutoff)
///   v' = (-L + nu + z(t)) v + e^{z} B(v, v)              (no cutoff)
/// from v0 at time t_begin by exponential Euler with exact diagonal
/// propagation of (-L+nu) dt + int z, the latter taken from the path's
/// exact cumulative integral. Steps coincide with path grid nodes:
/// dt must be an integer multiple of the path step.
Trajectory integrate_v(const SpectralModel& model, const NoisePath& path, double t_begin,
                       const StateVector& v0, double t_end, double dt, double nu,
                       const IntegrateOptions& opts = {});

/// Nodewise change of frame by e^{+-z(t)}.
Trajectory to_u(const Trajectory& traj, const NoisePath& path);
Trajectory to_v(const Trajectory& traj, const NoisePath& path);

enum class ReducedMode {
    Quadratic,  ///< slave part from L_s^{-1} B_s (quadratic manifold shape)
    ExactLP,    ///< slave part from fixed-point solves on a coarse time grid
};

struct ReducedOptions {
    ReducedMode mode = ReducedMode::Quadratic;
    double h_refresh = 0.25;       ///< exact-LP: recompute h every this many time units
    double window_T = 40.0;        ///< exact-LP: history window for the solves
    double lambda = 2.5;           ///< exact-LP: analysis rate for the solver
    double eta = 1.0;
    double tol = 1e-11;
    bool corrector = true;
};

/// Reduced flow on H_c in v-coordinates:
///   v_c' = (nu + z) v_c + P_c e^{-z} B^(R)(e^z (v_c + h_slave(t, v_c)))
/// with h_slave either e^{z(t)} L_s^{-1} B_s(v_c, v_c) (quadratic) or the
/// Lyapunov-Perron h(theta_t omega, .) interpolated linearly between
/// refresh times (exact-LP). Returns the H_c trajectory embedded in full
/// state vectors (s-components hold the slaved values used).
Trajectory integrate_reduced(const SpectralModel& model, const NoisePath& path, double a0,
                             double t_end, double dt, double nu,
                             const ReducedOptions& opts = {});

/// Scalar Stratonovich amplitude equation dA = (nu0 A - A^3/12) dT + A o dW
/// by the Heun (midpoint) scheme, driven by the increments of `w_slow`.
/// Returns A at the nodes of w_slow's grid.
std::vector<double> integrate_amplitude(double nu0, double a0,
                                        const std::vector<double>& w_slow, double dT);

}  // namespace rim

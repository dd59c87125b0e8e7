#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rim/time_grid.hpp"

namespace rim {

/// How the OU recursion is initialised at the left end of the grid.
enum class OuInit {
    Stationary,  ///< z(t_start) ~ N(0, sigma^2/2)  (mode A)
    ZeroTail,    ///< z(t_start) = 0; relies on e^{-tail_T} being negligible (mode B)
};

/// A two-sided discretised Brownian path with the derived stationary OU
/// process z and the path functionals used by the manifold estimates.
///
/// Conventions:
///  - w is pinned: w = 0 exactly at the t = 0 node.
///  - z solves dz + z dt = sigma dw pathwise: the triple (w, z, zint)
///    satisfies z(t) - z(0) + zint(t) - sigma*w(t) = 0 to rounding,
///    where zint(t) = int_0^t z ds is accumulated through that same
///    identity (exact, no quadrature error).
///  - z0_quadrature is the trapezoidal value of sigma*int_{-tail}^0 e^s w ds.
///    Note the sign convention of that integral formula is opposite to the
///    OU recursion: pathwise z0_quadrature ~= -z(0); the two agree in law.
///    The quadrature value is what the K-functional bound
///    z0 <= sigma*(k_tilde+1) pairs with.
struct NoisePath {
    TimeGrid grid;
    std::vector<double> w;
    std::vector<double> z;
    std::vector<double> zint;  ///< int_0^{t_i} z ds, anchored at the t=0 node
    double sigma = 0.0;
    double tail_T = 0.0;  ///< functionals are taken over [-tail_T, 0]
    std::uint64_t seed = 0;

    // functionals of the backward window [-tail_T, 0]
    double k_tilde = 0.0;      ///< sup_{s<=0} (w(s)+s), bridge-refined
    double k_tilde_neg = 0.0;  ///< same for the reflected path -w
    double k_pm = 0.0;         ///< K± = (k_tilde+1) + (k_tilde_neg+1)
    double z0_quadrature = 0.0;
    double z0_truncation_bound = 0.0;
    bool z0_truncation_warning = false;

    std::size_t i_zero() const { return grid.index_of(0.0); }
    double w_at(double t) const { return w[grid.index_of(t)]; }
    double z_at(double t) const { return z[grid.index_of(t)]; }
    double zint_at(double t) const { return zint[grid.index_of(t)]; }

    /// Build a synthetic path from explicit arrays (test inputs, refinement
    /// studies). zint is rebuilt from the OU identity when sigma > 0, else
    /// by trapezoid; functionals are grid-only (no bridge sampling).
    static NoisePath from_arrays(const TimeGrid& grid, std::vector<double> w,
                                 std::vector<double> z, double sigma, double tail_T);
};

/// K functionals of a path (grid suprema except k_tilde, which is
/// bridge-refined at construction and reused here).
struct KFunctionals {
    double k_tilde = 0.0;
    double k_pm = 0.0;
    double k2 = 0.0;
};

/// Sample a Brownian skeleton on `grid` (w only; z empty).
/// Backward of the t=0 node the path is generated as a Brownian motion in
/// reversed time pinned at w(0)=0, independent of the forward half.
/// Deterministic in `stream_seed` (use derive_stream for per-path seeds).
NoisePath sample_brownian(const TimeGrid& grid, std::uint64_t stream_seed);

/// Fill z (and zint) on a sampled skeleton. The OU step is exact: the pair
/// (dw, I) is jointly Gaussian with Var(dw)=dt, Var(I)=(1-e^{-2dt})/2,
/// Cov = 1-e^{-dt}, and I is drawn conditionally on the stored dw.
/// Also computes the backward-window functionals; `tail_T` defaults to the
/// full backward extent of the grid.
void derive_ou(NoisePath& path, double sigma, OuInit init = OuInit::ZeroTail,
               double tail_T = -1.0);

/// sigma * int_{-tail_T}^0 e^s w(s) ds by trapezoid; returns the value and
/// stores it plus the documented truncation bound sigma*e^{-tail}(K~+tail+1)
/// on the path. Sets z0_truncation_warning when the bound exceeds `tol`.
double z_at_zero(NoisePath& path, double tol = 1e-12);

/// Grid/bridge suprema K~, K± and K2(nu, sigma, eta) over [-tail_T, 0].
/// sigma must be > 0 (K2 divides by it).
KFunctionals compute_k_functionals(const NoisePath& path, double nu, double sigma,
                                   double eta);

/// The path of theta_{t_shift} omega on the remaining window:
/// w'(s) = w(s+t)-w(t), z'(s) = z(s+t), zint'(s) = zint(s+t)-zint(t).
/// t_shift must be a grid node time and the shifted window must still
/// cover [-tail_T, 0].
NoisePath shift_path(const NoisePath& path, double t_shift);

/// Convenience: sample + derive + functionals in one call.
NoisePath make_noise_path(const TimeGrid& grid, std::uint64_t stream_seed,
                          double sigma, OuInit init = OuInit::ZeroTail,
                          double tail_T = -1.0);

// --- serialization (see README for the formats) ---

/// Columnar CSV: header "t,w,z" then one row per node.
void write_path_csv(const NoisePath& path, std::ostream& os);

/// Binary cache (magic "RIMPATH1", little-endian doubles).
void write_path_cache(const NoisePath& path, const std::string& file);
NoisePath read_path_cache(const std::string& file);

}  // namespace rim

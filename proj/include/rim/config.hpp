#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace rim {

/// Malformed or inconsistent configuration; the CLI maps this to exit 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ModelConfig {
    std::uint64_t n_total = 16;
    double alpha = 0.75;
    double r_cut = 0.06;
    std::string nonlinearity = "burgers";  ///< burgers | none
};

struct DynamicsConfig {
    double nu = 0.0;
    double sigma = 0.1;
    double eta = 1.0;
    double delta = 1.0;
    double lambda = 2.5;
};

struct GridConfig {
    double dt = 0.005;
    double window_T = 40.0;  ///< history window for the fixed point
    double tail_T = 50.0;    ///< backward extent for z / K functionals
};

struct MonteCarloConfig {
    std::uint64_t n_paths = 200;
    std::uint64_t master_seed = 20240901;
};

struct SolverConfig {
    double tol = 1e-11;
    std::uint64_t max_iter = 400;
};

struct ShapeConfig {
    std::vector<double> sigma_sweep{0.04, 0.01, 0.0025};
    double nu_over_sigma = 0.5;       ///< nu = c * sigma per leg; must be < 1
    std::uint64_t xi_count = 4;       ///< magnitudes per sign, up to ||xi|| = R/2
    double calibration_fraction = 0.2;
    double safety_factor = 1.5;       ///< fitted C = factor * max calibration ratio
    double max_violation_fraction = 0.01;
};

struct AttractConfig {
    double t_end = 3.0;
    double sample_dt = 0.25;
    double xi0 = 0.03;          ///< basis coefficient of the on-manifold part
    double pert_mode2 = 0.012;  ///< off-manifold perturbation coefficients
    double pert_mode3 = 0.006;
    double min_observation = 2.0;  ///< paths leaving B_R earlier are flagged
    double dist_floor = 1e-9;      ///< samples below this are excluded from rate fits
    double min_bound_fraction = 0.95;
    double min_rate_fraction = 0.90;
};

struct ConeConfig {
    double t_end = 3.0;
    double u0_scale = 0.02;
    double pert_scale = 0.004;
    double cone_tol = 1e-8;
};

struct KtailConfig {
    double ks_threshold = 0.05;
};

struct AmplitudeConfig {
    std::vector<double> epsilons{0.2, 0.1};
    double nu0 = 1.0;
    double a0 = 0.5;
    double tol_factor = 2.0;  ///< per-path tolerance = tol_factor * eps^2
    double min_fraction = 0.9;
};

struct SimulateConfig {
    std::vector<double> u0{0.03, 0.0, 0.01};
    double t_end = 3.0;
    bool cutoff = true;
    bool with_reduced = false;
    std::string reduced_mode = "quadratic";  ///< quadratic | exact-lp
    bool with_amplitude = false;
    double dist_sample_dt = 0.0;  ///< 0 disables distance output
};

struct ExperimentConfig {
    ModelConfig model;
    DynamicsConfig dynamics;
    GridConfig grids;
    MonteCarloConfig monte_carlo;
    SolverConfig solver;
    ShapeConfig shape;
    AttractConfig attract;
    ConeConfig cone;
    KtailConfig ktail;
    AmplitudeConfig amplitude;
    SimulateConfig simulate;

    /// Parse an INI-style file; unknown sections or keys are errors.
    static ExperimentConfig load(const std::string& file);
    static ExperimentConfig parse(const std::string& text);

    /// Deterministic full-resolution dump (round-trips through parse()).
    std::string to_ini() const;

    /// FNV-1a content hash of to_ini(), hex encoded.
    std::string content_hash() const;
};

}  // namespace rim

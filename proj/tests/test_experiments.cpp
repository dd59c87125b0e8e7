#include <gtest/gtest.h>

#include "rim/experiments.hpp"

namespace rim {
namespace {

ExperimentConfig small_shape_config() {
    ExperimentConfig cfg;
    cfg.model.n_total = 6;
    cfg.model.r_cut = 0.2;
    cfg.dynamics.lambda = 1.5;
    cfg.monte_carlo.n_paths = 4;
    cfg.shape.sigma_sweep = {0.04, 0.01};
    cfg.shape.xi_count = 2;
    return cfg;
}

TEST(RunKtail, SmokeEmitsOneRowPerPath) {
    ExperimentConfig cfg;
    cfg.monte_carlo.n_paths = 10;
    cfg.grids.dt = 0.01;
    const ExperimentReport rep = run_ktail(cfg, 2);
    ASSERT_EQ(rep.tables.size(), 1u);
    EXPECT_EQ(rep.tables[0].rows.size(), 10u);
    EXPECT_TRUE(rep.summary.contains("ks_statistic_2ktilde_exp1"));
    EXPECT_EQ(rep.summary["z0_bound_violations"], 0);
}

TEST(RunKtail, PreconditionsEnforced) {
    ExperimentConfig cfg;
    cfg.grids.dt = 0.02;  // too coarse
    EXPECT_THROW(run_ktail(cfg, 1), ConfigError);
    ExperimentConfig cfg2;
    cfg2.grids.tail_T = 40.0;  // too short
    EXPECT_THROW(run_ktail(cfg2, 1), ConfigError);
    ExperimentConfig cfg3;
    cfg3.dynamics.nu = 0.2;  // |nu| > |sigma|
    EXPECT_THROW(run_ktail(cfg3, 1), ConfigError);
}

TEST(RunShape, SmokeProducesSummaryFields) {
    const ExperimentConfig cfg = small_shape_config();
    const ExperimentReport rep = run_shape(cfg, 2);
    EXPECT_TRUE(rep.summary.contains("fitted_c"));
    ASSERT_TRUE(rep.summary.contains("legs"));
    EXPECT_EQ(rep.summary["legs"].size(), 2u);
    for (const auto& leg : rep.summary["legs"])
        EXPECT_TRUE(leg.contains("violation_fraction"));
    // rows: per path, per sign-magnitude grid plus one zero row
    const std::size_t per_path = 2u * 2u + 1u;
    EXPECT_EQ(rep.tables[0].rows.size(), 2u * 4u * per_path);
}

TEST(RunShape, HypothesisViolationsRejected) {
    ExperimentConfig cfg = small_shape_config();
    cfg.shape.sigma_sweep = {-0.1};
    EXPECT_THROW(run_shape(cfg, 1), ConfigError);
    ExperimentConfig big = small_shape_config();
    big.model.r_cut = 1.5;  // R > 1
    EXPECT_THROW(run_shape(big, 1), ConfigError);
    ExperimentConfig cond = small_shape_config();
    cond.model.n_total = 16;  // condition (1) fails at R = 0.2, n = 16
    EXPECT_THROW(run_shape(cond, 1), ConfigError);
}

TEST(RunCone, SmokeNoReExits) {
    ExperimentConfig cfg;
    cfg.monte_carlo.n_paths = 4;
    cfg.cone.t_end = 1.0;
    cfg.grids.dt = 0.01;
    const ExperimentReport rep = run_cone(cfg, 2);
    EXPECT_EQ(rep.summary["re_exits"], 0);
    EXPECT_EQ(rep.summary["decay_violations"], 0);
    EXPECT_TRUE(rep.passed);
    EXPECT_EQ(rep.tables[0].rows.size(), 4u);
}

TEST(RunAmplitude, SmokeRuns) {
    ExperimentConfig cfg;
    cfg.monte_carlo.n_paths = 2;
    cfg.amplitude.epsilons = {0.2};
    cfg.grids.dt = 0.01;
    const ExperimentReport rep = run_amplitude(cfg, 2);
    EXPECT_EQ(rep.tables[0].rows.size(), 2u);
    EXPECT_TRUE(rep.summary["legs"][0].contains("fraction_ok"));
}

TEST(RunAttract, SmokeRuns) {
    ExperimentConfig cfg;
    cfg.monte_carlo.n_paths = 2;
    cfg.attract.t_end = 1.0;
    cfg.attract.sample_dt = 0.5;
    cfg.attract.min_observation = 1.0;
    cfg.grids.dt = 0.01;
    cfg.grids.window_T = 20.0;
    cfg.grids.tail_T = 20.0;
    const ExperimentReport rep = run_attraction(cfg, 2);
    EXPECT_EQ(rep.tables[0].rows.size(), 2u);
    EXPECT_TRUE(rep.summary.contains("bound_fraction"));
}

TEST(RunSimulate, ZeroInitialConditionStaysZero) {
    ExperimentConfig cfg;
    cfg.simulate.u0 = {0.0};
    cfg.simulate.t_end = 0.5;
    cfg.grids.dt = 0.01;
    const ExperimentReport rep = run_simulate(cfg, 1);
    for (const auto& row : rep.tables[0].rows)
        for (std::size_t c = 1; c < row.size(); ++c) ASSERT_EQ(row[c], "0");
}

TEST(Determinism, ReportsAreThreadCountInvariant) {
    ExperimentConfig cfg;
    cfg.monte_carlo.n_paths = 6;
    cfg.grids.dt = 0.01;
    const ExperimentReport serial = run_ktail(cfg, 1);
    const ExperimentReport parallel = run_ktail(cfg, 2);
    ASSERT_EQ(serial.tables[0].rows.size(), parallel.tables[0].rows.size());
    EXPECT_EQ(serial.tables[0].rows, parallel.tables[0].rows);
    EXPECT_EQ(serial.summary.dump(), parallel.summary.dump());
}

TEST(Dispatch, UnknownExperimentIsConfigError) {
    ExperimentConfig cfg;
    EXPECT_THROW(run_experiment("frobnicate", cfg, 1), ConfigError);
}

}  // namespace
}  // namespace rim

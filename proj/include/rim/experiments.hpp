#pragma once

#include "rim/config.hpp"
#include "rim/report.hpp"
#include "rim/spectral_model.hpp"

namespace rim {

/// Build the spectral model described by [model] (burgers | none).
SpectralModel build_model(const ModelConfig& cfg);

/// Monte-Carlo experiments. Each validates its hypotheses (conditions,
/// parameter ordering) up front, throwing ConfigError on violation, runs
/// paths on up to `threads` workers, and aggregates deterministically in
/// path order. Reports are byte-reproducible from (config, experiment).
ExperimentReport run_shape(const ExperimentConfig& cfg, unsigned threads);
ExperimentReport run_attraction(const ExperimentConfig& cfg, unsigned threads);
ExperimentReport run_cone(const ExperimentConfig& cfg, unsigned threads);
ExperimentReport run_ktail(const ExperimentConfig& cfg, unsigned threads);
ExperimentReport run_amplitude(const ExperimentConfig& cfg, unsigned threads);

/// Single-path trajectory dump (full system; optional reduced/amplitude
/// companions) for plotting.
ExperimentReport run_simulate(const ExperimentConfig& cfg, unsigned threads);

/// Dispatch by experiment name in {shape, attract, cone, ktail, amplitude,
/// simulate}; throws ConfigError for unknown names.
ExperimentReport run_experiment(const std::string& name, const ExperimentConfig& cfg,
                                unsigned threads);

}  // namespace rim

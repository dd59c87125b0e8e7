#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace rim {

/// One-sample Kolmogorov-Smirnov statistic of `sample` against the
/// standard exponential CDF 1 - e^{-x}.
double ks_statistic_exp1(std::vector<double> sample);

/// Least-squares slope and intercept of y against x.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};
LineFit fit_line(std::span<const double> x, std::span<const double> y);

double mean(std::span<const double> xs);
double variance(std::span<const double> xs);  ///< unbiased

/// Quantile by linear interpolation of the sorted sample, q in [0,1].
double quantile(std::vector<double> xs, double q);

}  // namespace rim

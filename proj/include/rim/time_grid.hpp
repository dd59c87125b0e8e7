#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace rim {

/// Uniform time grid t_i = t_start + i*dt, i = 0..n_steps.
/// When the grid spans t = 0 it must contain it as a node; all path and
/// history machinery anchors cumulative integrals at that node.
struct TimeGrid {
    double t_start = 0.0;
    double dt = 0.0;
    std::size_t n_steps = 0;

    TimeGrid() = default;
    TimeGrid(double t_start_, double dt_, std::size_t n_steps_)
        : t_start(t_start_), dt(dt_), n_steps(n_steps_) {
        if (dt <= 0.0) throw std::invalid_argument("TimeGrid: dt must be > 0");
        if (t_start <= 0.0 && t_end() >= 0.0 && !is_node(0.0))
            throw std::invalid_argument("TimeGrid: grid spanning 0 must contain it as a node");
    }

    /// Grid covering [a, b] with the given step; (b-a)/dt must be integral.
    static TimeGrid span(double a, double b, double dt) {
        if (dt <= 0.0) throw std::invalid_argument("TimeGrid: dt must be > 0");
        const double steps = (b - a) / dt;
        const auto n = static_cast<std::size_t>(std::llround(steps));
        if (std::abs(steps - static_cast<double>(n)) > 1e-9 * (1.0 + std::abs(steps)))
            throw std::invalid_argument("TimeGrid: (b-a) must be a multiple of dt");
        return TimeGrid(a, dt, n);
    }

    double t_end() const { return t_start + static_cast<double>(n_steps) * dt; }
    std::size_t n_nodes() const { return n_steps + 1; }
    double t(std::size_t i) const { return t_start + static_cast<double>(i) * dt; }

    bool is_node(double time) const {
        const double k = (time - t_start) / dt;
        const double r = std::round(k);
        return r >= 0.0 && r <= static_cast<double>(n_steps) &&
               std::abs(k - r) <= 1e-9 * (1.0 + std::abs(k));
    }

    /// Index of a node; throws if `time` is not on the grid.
    std::size_t index_of(double time) const {
        const double k = (time - t_start) / dt;
        const double r = std::round(k);
        if (!is_node(time)) throw std::out_of_range("TimeGrid: time is not a grid node");
        return static_cast<std::size_t>(r);
    }
};

}  // namespace rim

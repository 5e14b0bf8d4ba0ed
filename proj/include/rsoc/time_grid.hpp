#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace rsoc {

// Uniform time mesh on [t0, T]. Node k sits at t0 + k*dt; the last node is
// pinned to T so terminal conditions are representable exactly.
class TimeGrid {
public:
    TimeGrid(double t0, double T, std::size_t n_steps)
        : t0_(t0), T_(T), n_steps_(n_steps) {
        if (!std::isfinite(t0) || !std::isfinite(T))
            throw std::invalid_argument("TimeGrid: endpoints must be finite");
        if (!(t0 < T))
            throw std::invalid_argument("TimeGrid: need t0 < T, got [" +
                                        std::to_string(t0) + ", " + std::to_string(T) + "]");
        if (n_steps < 1)
            throw std::invalid_argument("TimeGrid: need n_steps >= 1");
        dt_ = (T - t0) / static_cast<double>(n_steps);
    }

    double t0() const { return t0_; }
    double horizon() const { return T_; }
    std::size_t n_steps() const { return n_steps_; }
    std::size_t n_nodes() const { return n_steps_ + 1; }
    double dt() const { return dt_; }

    double node(std::size_t k) const {
        return k == n_steps_ ? T_ : t0_ + static_cast<double>(k) * dt_;
    }

    bool contains(double t) const {
        const double slack = 1e-12 * (T_ - t0_);
        return t >= t0_ - slack && t <= T_ + slack;
    }

    // Fractional node coordinate of t; snaps to the nearest node when t is
    // within rounding distance of it, so node queries return stored values.
    double locate(double t) const {
        if (!contains(t))
            throw std::out_of_range("TimeGrid: t=" + std::to_string(t) +
                                    " outside [" + std::to_string(t0_) + ", " +
                                    std::to_string(T_) + "]");
        double u = (t - t0_) / dt_;
        const double k = std::round(u);
        if (std::abs(u - k) < 1e-9 && k >= 0.0 && k <= static_cast<double>(n_steps_))
            u = k;
        if (u < 0.0) u = 0.0;
        if (u > static_cast<double>(n_steps_)) u = static_cast<double>(n_steps_);
        return u;
    }

    bool operator==(const TimeGrid& o) const {
        return t0_ == o.t0_ && T_ == o.T_ && n_steps_ == o.n_steps_;
    }
    bool operator!=(const TimeGrid& o) const { return !(*this == o); }

private:
    double t0_;
    double T_;
    std::size_t n_steps_;
    double dt_;
};

inline TimeGrid make_grid(double t0, double T, std::size_t n_steps) {
    return TimeGrid(t0, T, n_steps);
}

// Scalar function sampled on a TimeGrid; linear interpolation between nodes,
// exact values at nodes, error outside [t0, T].
class GridFunction {
public:
    GridFunction() = default;

    GridFunction(TimeGrid grid, std::vector<double> values)
        : grid_(grid), values_(std::move(values)) {
        if (values_.size() != grid_.n_nodes())
            throw std::invalid_argument("GridFunction: need n_steps+1 values, got " +
                                        std::to_string(values_.size()));
    }

    static GridFunction constant(const TimeGrid& grid, double c) {
        return GridFunction(grid, std::vector<double>(grid.n_nodes(), c));
    }

    const TimeGrid& grid() const { return grid_; }
    const std::vector<double>& values() const { return values_; }
    double operator[](std::size_t k) const { return values_[k]; }

    double operator()(double t) const {
        const double u = grid_.locate(t);
        const auto k = static_cast<std::size_t>(u);
        if (k >= grid_.n_steps()) return values_.back();
        const double w = u - static_cast<double>(k);
        if (w == 0.0) return values_[k];
        return (1.0 - w) * values_[k] + w * values_[k + 1];
    }

private:
    TimeGrid grid_{0.0, 1.0, 1};
    std::vector<double> values_{0.0, 0.0};
};

inline double eval_grid_function(const GridFunction& f, double t) { return f(t); }

// Local 4-point (cubic) evaluation of a grid function. Used by the ODE
// solvers when a previously solved coefficient enters another equation's
// right-hand side: linear interpolation at Runge-Kutta stage points would
// cap the observable order at two.
inline double eval_cubic(const GridFunction& f, double t) {
    const TimeGrid& g = f.grid();
    const std::size_t n = g.n_steps();
    if (n < 3) return f(t);
    const double u = g.locate(t);
    auto k = static_cast<std::size_t>(u);
    if (k >= n) k = n - 1;
    const double w = u - static_cast<double>(k);
    if (w == 0.0) return f.values()[k];
    // stencil {k-1, k, k+1, k+2}, shifted at the ends
    std::size_t i0 = (k == 0) ? 0 : k - 1;
    if (i0 + 3 > n) i0 = n - 3;
    const double s = u - static_cast<double>(i0);
    const auto& v = f.values();
    const double c0 = -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0;
    const double c1 = s * (s - 2.0) * (s - 3.0) / 2.0;
    const double c2 = -s * (s - 1.0) * (s - 3.0) / 2.0;
    const double c3 = s * (s - 1.0) * (s - 2.0) / 6.0;
    return c0 * v[i0] + c1 * v[i0 + 1] + c2 * v[i0 + 2] + c3 * v[i0 + 3];
}

} // namespace rsoc

#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "rsoc/time_grid.hpp"

namespace rsoc {

// Signals a non-finite right-hand side or state during fixed-step
// integration (e.g. Riccati blow-up inside the horizon).
class OdeBlowup : public std::runtime_error {
public:
    OdeBlowup(double t, double y)
        : std::runtime_error("ODE state became non-finite near t=" + std::to_string(t) +
                             " (y=" + std::to_string(y) + ")"),
          time(t) {}
    double time;
};

namespace detail {

template <typename Rhs>
double rk4_step(const Rhs& rhs, double t, double y, double h) {
    const double k1 = rhs(t, y);
    const double k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1);
    const double k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2);
    const double k4 = rhs(t + h, y + h * k3);
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

} // namespace detail

// Classical fixed-step RK4 marching from T down to t0. result[n_steps] holds
// the terminal value exactly.
template <typename Rhs>
GridFunction integrate_ode_backward(const Rhs& rhs, double terminal, const TimeGrid& grid) {
    std::vector<double> v(grid.n_nodes());
    const std::size_t n = grid.n_steps();
    const double h = -grid.dt();
    v[n] = terminal;
    double y = terminal;
    for (std::size_t k = n; k-- > 0;) {
        const double t = grid.node(k + 1);
        y = detail::rk4_step(rhs, t, y, h);
        if (!std::isfinite(y)) throw OdeBlowup(grid.node(k), y);
        v[k] = y;
    }
    return GridFunction(grid, std::move(v));
}

// Forward companion, mainly for round-trip consistency checks.
template <typename Rhs>
GridFunction integrate_ode_forward(const Rhs& rhs, double initial, const TimeGrid& grid) {
    std::vector<double> v(grid.n_nodes());
    const std::size_t n = grid.n_steps();
    const double h = grid.dt();
    v[0] = initial;
    double y = initial;
    for (std::size_t k = 0; k < n; ++k) {
        const double t = grid.node(k);
        y = detail::rk4_step(rhs, t, y, h);
        if (!std::isfinite(y)) throw OdeBlowup(grid.node(k + 1), y);
        v[k + 1] = y;
    }
    return GridFunction(grid, std::move(v));
}

} // namespace rsoc

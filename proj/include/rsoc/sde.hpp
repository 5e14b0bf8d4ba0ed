#pragma once

#include <cmath>
#include <cstdio>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rsoc/noise.hpp"
#include "rsoc/params.hpp"
#include "rsoc/problem.hpp"

namespace rsoc {

class NonFiniteState : public std::runtime_error {
public:
    NonFiniteState(std::size_t path, std::size_t step)
        : std::runtime_error("simulation produced a non-finite state at path " +
                             std::to_string(path) + ", step " + std::to_string(step)),
          path(path), step(step) {}
    std::size_t path;
    std::size_t step;
};

// Euler-Maruyama ensemble on one noise block. States are stored per path per
// node (state_dim components), controls per path per step; the consumed noise
// block is retained for residual checks and common-random-number reuse.
struct SamplePaths {
    TimeGrid grid{0.0, 1.0, 1};
    std::size_t n_paths = 0;
    std::size_t state_dim = 1;
    std::vector<double> states;   // (path, node, component), row-major
    std::vector<double> controls; // (path, step)
    std::shared_ptr<const NoiseBlock> noise;

    double state(std::size_t p, std::size_t k, std::size_t c = 0) const {
        return states[(p * grid.n_nodes() + k) * state_dim + c];
    }
    double control(std::size_t p, std::size_t k) const { return controls[p * grid.n_steps() + k]; }
    double& state_ref(std::size_t p, std::size_t k, std::size_t c) {
        return states[(p * grid.n_nodes() + k) * state_dim + c];
    }
};

namespace detail {
inline SamplePaths alloc_paths(const NoiseBlock& noise, std::size_t state_dim,
                               std::shared_ptr<const NoiseBlock> keep) {
    SamplePaths out;
    out.grid = noise.grid();
    out.n_paths = noise.n_paths();
    out.state_dim = state_dim;
    out.states.resize(out.n_paths * out.grid.n_nodes() * state_dim);
    out.controls.resize(out.n_paths * out.grid.n_steps());
    out.noise = std::move(keep);
    return out;
}
} // namespace detail

// Factor under the transformed measure: the control-dependent drift absorbed
// from the wealth equation by the Girsanov change of measure,
//   dX = (b + B X - theta (lambda sigma^T) u) dt + lambda dW.
// Controls are evaluated at the left endpoint of each step.
inline SamplePaths simulate_factor_transformed(const PortfolioParams& params,
                                               const ScalarPolicy& policy, double x0,
                                               std::shared_ptr<const NoiseBlock> noise) {
    params.validate();
    if (noise->dim() != 2) throw std::invalid_argument("simulate_factor_transformed: need d=2 noise");
    SamplePaths out = detail::alloc_paths(*noise, 1, noise);
    const TimeGrid& g = out.grid;
    const double dt = g.dt();
    const double th_ls = params.theta * params.lambda_sigma();
    const double l0 = params.lambda[0], l1 = params.lambda[1];
    const std::size_t steps = g.n_steps();
    for (std::size_t p = 0; p < out.n_paths; ++p) {
        double x = x0;
        out.state_ref(p, 0, 0) = x;
        for (std::size_t k = 0; k < steps; ++k) {
            const double t = g.node(k);
            const double u = policy(t, x);
            out.controls[p * steps + k] = u;
            x = x + (params.b + params.B * x - th_ls * u) * dt + l0 * noise->dw(p, k, 0) +
                l1 * noise->dw(p, k, 1);
            if (!std::isfinite(x)) throw NonFiniteState(p, k);
            out.state_ref(p, k + 1, 0) = x;
        }
    }
    return out;
}

// Factor and log-wealth under the original measure. The factor is control
// free; log V carries the exact Ito drift r + u(a + A X - r) - u^2 ss / 2 and
// diffusion u sigma. State components: 0 = X, 1 = log V.
inline SamplePaths simulate_wealth_original(const PortfolioParams& params,
                                            const ScalarPolicy& policy, double x0, double v0,
                                            std::shared_ptr<const NoiseBlock> noise) {
    params.validate();
    if (!(v0 > 0.0)) throw std::invalid_argument("simulate_wealth_original: need v0 > 0");
    if (noise->dim() != 2) throw std::invalid_argument("simulate_wealth_original: need d=2 noise");
    SamplePaths out = detail::alloc_paths(*noise, 2, noise);
    const TimeGrid& g = out.grid;
    const double dt = g.dt();
    const double ss = params.sigma_sq();
    const double s0 = params.sigma[0], s1 = params.sigma[1];
    const double l0 = params.lambda[0], l1 = params.lambda[1];
    const std::size_t steps = g.n_steps();
    for (std::size_t p = 0; p < out.n_paths; ++p) {
        double x = x0;
        double lv = std::log(v0);
        out.state_ref(p, 0, 0) = x;
        out.state_ref(p, 0, 1) = lv;
        for (std::size_t k = 0; k < steps; ++k) {
            const double t = g.node(k);
            const double u = policy(t, x);
            out.controls[p * steps + k] = u;
            const double rt = params.r(t);
            const double dw0 = noise->dw(p, k, 0);
            const double dw1 = noise->dw(p, k, 1);
            lv = lv + (rt + u * (params.a + params.A * x - rt) - 0.5 * u * u * ss) * dt +
                 u * (s0 * dw0 + s1 * dw1);
            // same recursion as the transformed factor with a zero control term
            x = x + (params.b + params.B * x - 0.0) * dt + l0 * dw0 + l1 * dw1;
            if (!std::isfinite(x) || !std::isfinite(lv)) throw NonFiniteState(p, k);
            out.state_ref(p, k + 1, 0) = x;
            out.state_ref(p, k + 1, 1) = lv;
        }
    }
    return out;
}

// Euler-Maruyama for an arbitrary GeneralProblem. The policy sees the full
// state vector; scalar control component for now.
inline SamplePaths simulate_generic(const GeneralProblem& problem, const FeedbackPolicy& policy,
                                    const Vec& x0, std::shared_ptr<const NoiseBlock> noise) {
    problem.validate();
    if (!policy.map) throw std::invalid_argument("simulate_generic: missing policy");
    if (x0.size() != problem.n) throw std::invalid_argument("simulate_generic: bad x0 dimension");
    if (noise->dim() != problem.d) throw std::invalid_argument("simulate_generic: noise dimension mismatch");
    if (problem.m != 1) throw std::invalid_argument("simulate_generic: scalar controls only");
    SamplePaths out = detail::alloc_paths(*noise, problem.n, noise);
    const TimeGrid& g = out.grid;
    const double dt = g.dt();
    const std::size_t steps = g.n_steps();
    Vec x(problem.n);
    for (std::size_t p = 0; p < out.n_paths; ++p) {
        x = x0;
        for (std::size_t c = 0; c < problem.n; ++c) out.state_ref(p, 0, c) = x[c];
        for (std::size_t k = 0; k < steps; ++k) {
            const double t = g.node(k);
            const Vec u = policy.map(t, x);
            if (u.size() != problem.m || !std::isfinite(u[0]))
                throw std::invalid_argument("simulate_generic: policy returned a bad control");
            out.controls[p * steps + k] = u[0];
            const Vec drift = problem.f(t, x, u);
            const Mat diff = problem.sigma(t, x, u);
            for (std::size_t c = 0; c < problem.n; ++c) {
                double xn = x[c] + drift[c] * dt;
                for (std::size_t j = 0; j < problem.d; ++j) xn += diff(c, j) * noise->dw(p, k, j);
                if (!std::isfinite(xn)) throw NonFiniteState(p, k);
                x[c] = xn;
                out.state_ref(p, k + 1, c) = xn;
            }
        }
    }
    return out;
}

// Scalar-state policies lift naturally into the generic interface.
inline FeedbackPolicy lift(const ScalarPolicy& policy) {
    return FeedbackPolicy{
        [map = policy.map](double t, const Vec& x) { return Vec{map(t, x[0])}; }, policy.label};
}

// CSV dump: path, t, x, (log_v,) u. The control column repeats the last
// applied control on the terminal row.
inline void write_paths_csv(const SamplePaths& paths, std::ostream& os) {
    const bool has_lv = paths.state_dim > 1;
    os << (has_lv ? "path,t,x,log_v,u\n" : "path,t,x,u\n");
    char buf[64];
    auto put = [&](double x) {
        std::snprintf(buf, sizeof buf, "%.17g", x);
        os << buf;
    };
    const std::size_t steps = paths.grid.n_steps();
    for (std::size_t p = 0; p < paths.n_paths; ++p)
        for (std::size_t k = 0; k <= steps; ++k) {
            os << p << ',';
            put(paths.grid.node(k));
            os << ',';
            put(paths.state(p, k, 0));
            if (has_lv) {
                os << ',';
                put(paths.state(p, k, 1));
            }
            os << ',';
            put(paths.control(p, k < steps ? k : steps - 1));
            os << '\n';
        }
}

} // namespace rsoc

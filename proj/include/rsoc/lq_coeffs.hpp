#pragma once

#include <cmath>
#include <ostream>
#include <stdexcept>

#include "rsoc/ode.hpp"
#include "rsoc/params.hpp"
#include "rsoc/time_grid.hpp"

namespace rsoc {

namespace detail {
inline void require_same_grid(const GridFunction& f, const TimeGrid& grid, const char* what) {
    if (f.grid() != grid)
        throw std::invalid_argument(std::string("grid mismatch: ") + what +
                                    " was solved on a different grid");
}
} // namespace detail

// Riccati coefficient of the quadratic value term:
//   dGamma/dt = -alpha*Gamma^2 - 2*beta*Gamma + c0,  Gamma(T) = 0.
inline GridFunction solve_gamma(const PortfolioParams& params, const TimeGrid& grid) {
    params.validate();
    const double al = params.alpha();
    const double be = params.beta();
    const double c0 = params.c0();
    auto rhs = [al, be, c0](double /*t*/, double g) { return -al * g * g - 2.0 * be * g + c0; };
    return integrate_ode_backward(rhs, 0.0, grid);
}

// Closed form of the same constant-coefficient Riccati problem. With
// delta = sqrt(beta^2 + alpha*c0) and tau = T - t:
//   Gamma(t) = -c0 (1 - e^{-2 delta tau}) / (delta (1 + e^{-2 delta tau}) - beta (1 - e^{-2 delta tau}))
// degenerating to the linear-ODE solution when alpha = 0 and to 0 when A = 0.
inline double gamma_closed_form(const PortfolioParams& params, double t) {
    params.validate();
    if (!(t <= params.T))
        throw std::invalid_argument("gamma_closed_form: t beyond horizon");
    const double c0 = params.c0();
    if (c0 == 0.0) return 0.0; // A = 0: Gamma = 0 is the solution
    const double tau = params.T - t;
    const double al = params.alpha();
    const double be = params.beta();
    if (al > 0.0) {
        const double delta = std::sqrt(be * be + al * c0);
        const double e = std::exp(-2.0 * delta * tau);
        return -c0 * (1.0 - e) / (delta * (1.0 + e) - be * (1.0 - e));
    }
    if (be != 0.0) return -c0 * std::expm1(2.0 * be * tau) / (2.0 * be);
    return -c0 * tau;
}

// Linear equation of the first-order value coefficient:
//   dphi/dt = -(beta + alpha*Gamma) phi - b*Gamma
//             + (A + theta*(lambda sigma^T)*Gamma) (a - r_t) / ((theta+1) sigma sigma^T),
//   phi(T) = 0.
inline GridFunction solve_phi(const PortfolioParams& params, const GridFunction& gamma,
                              const TimeGrid& grid) {
    params.validate();
    detail::require_same_grid(gamma, grid, "gamma");
    const double al = params.alpha();
    const double be = params.beta();
    const double ls = params.lambda_sigma();
    const double ss = params.sigma_sq();
    const double th = params.theta;
    auto rhs = [&](double t, double phi) {
        const double g = eval_cubic(gamma, t);
        return -(be + al * g) * phi - params.b * g +
               (params.A + th * ls * g) * (params.a - params.r(t)) / ((th + 1.0) * ss);
    };
    return integrate_ode_backward(rhs, 0.0, grid);
}

// Constant value-offset equation, terminal value -log v:
//   dk/dt = (a - r_t + theta*phi*(lambda sigma^T))^2 / (2(theta+1) sigma sigma^T)
//           + r_t - b*phi - (theta/2)(lambda lambda^T) phi^2 - (1/2)(lambda lambda^T) Gamma.
// The sign convention is the one that zeroes the HJB residual; the tests pin it.
inline GridFunction solve_k(const PortfolioParams& params, const GridFunction& gamma,
                            const GridFunction& phi, const TimeGrid& grid) {
    params.validate();
    detail::require_same_grid(gamma, grid, "gamma");
    detail::require_same_grid(phi, grid, "phi");
    const double ls = params.lambda_sigma();
    const double ll = params.lambda_sq();
    const double ss = params.sigma_sq();
    const double th = params.theta;
    auto rhs = [&](double t, double /*k*/) {
        const double g = eval_cubic(gamma, t);
        const double f = eval_cubic(phi, t);
        const double excess = params.a - params.r(t) + th * f * ls;
        return excess * excess / (2.0 * (th + 1.0) * ss) + params.r(t) - params.b * f -
               0.5 * th * ll * f * f - 0.5 * ll * g;
    };
    return integrate_ode_backward(rhs, -std::log(params.v), grid);
}

// Second-order adjoint coefficient:
//   drho/dt = -2B rho - theta*(lambda lambda^T) Gamma^2,  rho(T) = 0.
inline GridFunction solve_rho(const PortfolioParams& params, const GridFunction& gamma,
                              const TimeGrid& grid) {
    params.validate();
    detail::require_same_grid(gamma, grid, "gamma");
    const double ll = params.lambda_sq();
    const double th = params.theta;
    auto rhs = [&](double t, double rho) {
        const double g = eval_cubic(gamma, t);
        return -2.0 * params.B * rho - th * ll * g * g;
    };
    return integrate_ode_backward(rhs, 0.0, grid);
}

// All four deterministic coefficients on one grid. The dynamic-programming
// route reuses gamma and phi verbatim (Psi == Gamma, eta == phi).
struct CoefficientSet {
    TimeGrid grid{0.0, 1.0, 1};
    GridFunction gamma;
    GridFunction phi;
    GridFunction k;
    GridFunction rho;
};

inline CoefficientSet solve_coefficients(const PortfolioParams& params, const TimeGrid& grid) {
    CoefficientSet c{grid, {}, {}, {}, {}};
    c.gamma = solve_gamma(params, grid);
    c.phi = solve_phi(params, c.gamma, grid);
    c.k = solve_k(params, c.gamma, c.phi, grid);
    c.rho = solve_rho(params, c.gamma, grid);
    return c;
}

} // namespace rsoc

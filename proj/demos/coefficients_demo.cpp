// Solve the four coefficient equations for the baseline market and print a
// short table together with the closed-form Riccati cross-check.

#include <cstdio>

#include "rsoc/rsoc.hpp"

int main() {
    const rsoc::PortfolioParams params = rsoc::baseline_params();
    const rsoc::TimeGrid grid(0.0, params.T, 2560);
    const rsoc::CoefficientSet coeffs = rsoc::solve_coefficients(params, grid);

    std::printf("%8s %14s %14s %14s %14s %14s\n", "t", "gamma", "gamma_closed", "phi", "k", "rho");
    for (int i = 0; i <= 10; ++i) {
        const double t = params.T * i / 10.0;
        std::printf("%8.2f %14.10f %14.10f %14.10f %14.10f %14.10f\n", t, coeffs.gamma(t),
                    rsoc::gamma_closed_form(params, t), coeffs.phi(t), coeffs.k(t), coeffs.rho(t));
    }

    const rsoc::ValueCoefficients vc = rsoc::make_value_coefficients(coeffs);
    std::printf("\nV(0, 1)  = %.10f\n", rsoc::value_fn(0.0, 1.0, vc));
    std::printf("u*(0, 1) = %.10f\n", rsoc::feedback_mp(0.0, 1.0, coeffs, params));
    return 0;
}

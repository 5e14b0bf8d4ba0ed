#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

#include "rsoc/time_grid.hpp"

namespace rsoc {

// Deterministic riskless rate: a constant promoted on the fly, or a sampled
// curve. Always evaluated through operator().
class Rate {
public:
    Rate() : constant_(0.0) {}
    Rate(double c) : constant_(c) {
        if (!std::isfinite(c)) throw std::invalid_argument("Rate: non-finite constant");
    }
    Rate(GridFunction curve) : curve_(std::move(curve)), is_curve_(true) {}

    double operator()(double t) const { return is_curve_ ? curve_(t) : constant_; }
    bool is_constant() const { return !is_curve_; }
    double constant_value() const {
        if (is_curve_) throw std::logic_error("Rate: not a constant");
        return constant_;
    }

private:
    double constant_ = 0.0;
    GridFunction curve_;
    bool is_curve_ = false;
};

// Market constants of the single-stock / single-factor model:
//   bond    dR = r_t R dt
//   stock   dS = S{(a + A X) dt + sigma dW}
//   factor  dX = (b + B X) dt + lambda dW
// with 2-dimensional Brownian noise, exponential risk-sensitivity theta > 0
// and initial wealth v > 0.
struct PortfolioParams {
    Rate r;
    double a = 0.0;
    double A = 0.0;
    double b = 0.0;
    double B = 0.0;
    std::array<double, 2> sigma{0.0, 0.0};
    std::array<double, 2> lambda{0.0, 0.0};
    double theta = 1.0;
    double v = 1.0;
    double T = 1.0;

    double sigma_sq() const { return sigma[0] * sigma[0] + sigma[1] * sigma[1]; } // sigma sigma^T
    double lambda_sq() const { return lambda[0] * lambda[0] + lambda[1] * lambda[1]; } // lambda lambda^T
    double lambda_sigma() const { return lambda[0] * sigma[0] + lambda[1] * sigma[1]; } // lambda sigma^T

    // Constant coefficients of the scalar Riccati equation:
    //   alpha = theta*ll - theta^2/(theta+1) * ls^2/ss      (>= 0 by Cauchy-Schwarz)
    //   beta  = B - theta/(theta+1) * A*ls/ss
    //   c0    = A^2 / ((theta+1)*ss)                        (>= 0)
    double alpha() const {
        const double a0 = theta * lambda_sq() -
                          theta * theta / (theta + 1.0) * lambda_sigma() * lambda_sigma() / sigma_sq();
        return a0 < 0.0 ? 0.0 : a0; // clip rounding residue; exact zero iff lambda = 0
    }
    double beta() const { return B - theta / (theta + 1.0) * A * lambda_sigma() / sigma_sq(); }
    double c0() const { return A * A / ((theta + 1.0) * sigma_sq()); }

    void validate() const {
        if (!(sigma_sq() > 0.0)) throw std::invalid_argument("PortfolioParams: need sigma*sigma^T > 0");
        if (!(theta > 0.0)) throw std::invalid_argument("PortfolioParams: need theta > 0");
        if (!(v > 0.0)) throw std::invalid_argument("PortfolioParams: need v > 0");
        if (!(T > 0.0) || !std::isfinite(T)) throw std::invalid_argument("PortfolioParams: need finite T > 0");
        for (double c : {a, A, b, B, sigma[0], sigma[1], lambda[0], lambda[1]})
            if (!std::isfinite(c)) throw std::invalid_argument("PortfolioParams: non-finite coefficient");
        const double raw_alpha = theta * lambda_sq() -
                                 theta * theta / (theta + 1.0) * lambda_sigma() * lambda_sigma() / sigma_sq();
        if (raw_alpha < -1e-12)
            throw std::invalid_argument("PortfolioParams: alpha < 0, parameters inconsistent");
    }
};

// The documented desk-scale baseline: mean-reverting factor, positive excess
// return, solvable Riccati.
inline PortfolioParams baseline_params() {
    PortfolioParams p;
    p.r = Rate(0.02);
    p.a = 0.08;
    p.A = 0.2;
    p.b = 0.1;
    p.B = -0.5;
    p.sigma = {0.3, 0.0};
    p.lambda = {0.1, 0.2};
    p.theta = 1.0;
    p.v = 1.0;
    p.T = 1.0;
    return p;
}

} // namespace rsoc

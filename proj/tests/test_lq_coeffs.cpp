#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <string>

#include "rsoc/hamiltonians.hpp"
#include "rsoc/io.hpp"
#include "rsoc/lq_coeffs.hpp"
#include "rsoc/philox.hpp"
#include "rsoc/portfolio.hpp"

using namespace rsoc;

namespace {

// Independent oracle: one RK4 march over the coupled system
// (Gamma, phi, rho), no grid storage or interpolation involved.
struct CoupledSolution {
    double gamma;
    double phi;
    double rho;
};

CoupledSolution coupled_oracle(const PortfolioParams& p, std::size_t n) {
    const double al = p.alpha(), be = p.beta(), c0 = p.c0();
    const double ls = p.lambda_sigma(), ll = p.lambda_sq(), ss = p.sigma_sq(), th = p.theta;
    auto rhs = [&](double t, const std::array<double, 3>& y) {
        const double g = y[0], f = y[1], r = y[2];
        return std::array<double, 3>{
            -al * g * g - 2.0 * be * g + c0,
            -(be + al * g) * f - p.b * g + (p.A + th * ls * g) * (p.a - p.r(t)) / ((th + 1.0) * ss),
            -2.0 * p.B * r - th * ll * g * g};
    };
    const double h = -p.T / static_cast<double>(n);
    std::array<double, 3> y{0.0, 0.0, 0.0};
    double t = p.T;
    for (std::size_t k = 0; k < n; ++k) {
        const auto k1 = rhs(t, y);
        std::array<double, 3> y2;
        for (int i = 0; i < 3; ++i) y2[i] = y[i] + 0.5 * h * k1[i];
        const auto k2 = rhs(t + 0.5 * h, y2);
        for (int i = 0; i < 3; ++i) y2[i] = y[i] + 0.5 * h * k2[i];
        const auto k3 = rhs(t + 0.5 * h, y2);
        for (int i = 0; i < 3; ++i) y2[i] = y[i] + h * k3[i];
        const auto k4 = rhs(t + h, y2);
        for (int i = 0; i < 3; ++i) y[i] += (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        t += h;
    }
    return {y[0], y[1], y[2]};
}

} // namespace

TEST_CASE("terminal conditions are exact") {
    const PortfolioParams p = baseline_params();
    const TimeGrid g = make_grid(0.0, p.T, 200);
    const CoefficientSet c = solve_coefficients(p, g);
    CHECK(c.gamma.values().back() == 0.0);
    CHECK(c.phi.values().back() == 0.0);
    CHECK(c.rho.values().back() == 0.0);
    CHECK(c.k.values().back() == -std::log(p.v));
}

TEST_CASE("A = 0 collapses gamma and rho to zero") {
    PortfolioParams p = baseline_params();
    p.A = 0.0;
    const TimeGrid g = make_grid(0.0, p.T, 100);
    const GridFunction gamma = solve_gamma(p, g);
    for (double v : gamma.values()) CHECK(v == 0.0);
    const GridFunction rho = solve_rho(p, gamma, g);
    for (double v : rho.values()) CHECK(v == 0.0);
    for (int i = 0; i <= 20; ++i) CHECK(gamma_closed_form(p, p.T * i / 20.0) == 0.0);
}

TEST_CASE("A = 0 with a = r kills phi as well") {
    PortfolioParams p = baseline_params();
    p.A = 0.0;
    p.a = 0.02;
    p.r = Rate(0.02);
    const TimeGrid g = make_grid(0.0, p.T, 100);
    const GridFunction gamma = solve_gamma(p, g);
    const GridFunction phi = solve_phi(p, gamma, g);
    for (double v : phi.values()) CHECK(v == 0.0);
}

TEST_CASE("degenerate market gives k identically zero") {
    PortfolioParams p = baseline_params();
    p.A = 0.0;
    p.a = 0.0;
    p.r = Rate(0.0);
    p.lambda = {0.0, 0.0};
    p.v = 1.0;
    const TimeGrid g = make_grid(0.0, p.T, 100);
    const CoefficientSet c = solve_coefficients(p, g);
    for (double v : c.k.values()) CHECK(v == 0.0);
}

TEST_CASE("closed form, linear branch (lambda = 0)") {
    PortfolioParams p = baseline_params();
    p.lambda = {0.0, 0.0};
    REQUIRE(p.alpha() == 0.0);
    const double be = p.beta();
    const double c0 = p.c0();
    const TimeGrid g = make_grid(0.0, p.T, 4000);
    const GridFunction gamma = solve_gamma(p, g);
    for (int i = 0; i <= 10; ++i) {
        const double t = p.T * i / 10.0;
        const double analytic = -c0 * std::expm1(2.0 * be * (p.T - t)) / (2.0 * be);
        CHECK(gamma_closed_form(p, t) == Catch::Approx(analytic).margin(1e-15));
        CHECK(gamma(t) == Catch::Approx(analytic).margin(1e-10));
    }
}

TEST_CASE("closed form matches a million-step RK4 march") {
    const PortfolioParams p = baseline_params();
    const CoupledSolution ref = coupled_oracle(p, 1000000);
    CHECK(std::abs(gamma_closed_form(p, 0.0) - ref.gamma) <= 1e-12);
}

TEST_CASE("solver agrees with the closed form at n = 1000") {
    const PortfolioParams p = baseline_params();
    const TimeGrid g = make_grid(0.0, p.T, 1000);
    const GridFunction gamma = solve_gamma(p, g);
    for (std::size_t j = 0; j <= 1000; j += 50)
        CHECK(std::abs(gamma[j] - gamma_closed_form(p, g.node(j))) <= 1e-8);
}

TEST_CASE("phi and rho at t = 0 match the coupled fine-grid oracle") {
    const PortfolioParams p = baseline_params();
    const CoupledSolution ref = coupled_oracle(p, 1000000);
    const TimeGrid g = make_grid(0.0, p.T, 1000);
    const CoefficientSet c = solve_coefficients(p, g);
    CHECK(std::abs(c.gamma(0.0) - ref.gamma) <= 1e-8);
    CHECK(std::abs(c.phi(0.0) - ref.phi) <= 1e-8);
    CHECK(std::abs(c.rho(0.0) - ref.rho) <= 1e-8);
}

TEST_CASE("k fixes the sign convention: zero HJB residual at random points") {
    const PortfolioParams p = baseline_params();
    const TimeGrid g = make_grid(0.0, p.T, 2560);
    const CoefficientSet c = solve_coefficients(p, g);
    const ValueCoefficients vc = make_value_coefficients(c);
    const ValueTimeDerivative vt = make_value_time_derivative(c);
    const GeneralProblem problem = make_general_problem(p);
    for (std::uint32_t i = 0; i < 100; ++i) {
        const double t = p.T * counter_uniform(11, 0, i, 0, 0);
        const double x = -3.0 + 6.0 * counter_uniform(11, 0, i, 1, 0);
        const Vec pv{value_fn_x(t, x, vc)};
        Mat P(1, 1);
        P(0, 0) = value_fn_xx(t, x, vc);
        const double res = vt(t, x) + minimize_G(t, Vec{x}, pv, P, problem).value;
        REQUIRE(std::abs(res) <= 1e-6);
    }
}

TEST_CASE("comparison: rho dominates gamma, strictly under active forcing") {
    const PortfolioParams p = baseline_params();
    const TimeGrid g = make_grid(0.0, p.T, 2000);
    const CoefficientSet c = solve_coefficients(p, g);
    double min_gap = 1e300, max_gap = -1e300;
    for (std::size_t j = 0; j < g.n_nodes(); ++j) {
        const double gap = c.rho[j] - c.gamma[j];
        min_gap = std::min(min_gap, gap);
        max_gap = std::max(max_gap, gap);
    }
    CHECK(min_gap >= -1e-10);
    CHECK(max_gap >= 1e-6); // forcing (theta ls Gamma + A)^2 > 0 here
    CHECK(c.rho[0] - c.gamma[0] >= 1e-6);
}

TEST_CASE("property: alpha nonnegative across random parameter draws") {
    for (std::uint32_t i = 0; i < 200; ++i) {
        PortfolioParams p = baseline_params();
        p.theta = 0.05 + 5.0 * counter_uniform(17, 0, i, 0, 0);
        p.sigma = {0.05 + counter_uniform(17, 0, i, 1, 0), counter_uniform(17, 0, i, 2, 0) - 0.5};
        p.lambda = {counter_uniform(17, 0, i, 3, 0) - 0.5, counter_uniform(17, 0, i, 4, 0) - 0.5};
        p.validate();
        REQUIRE(p.alpha() >= 0.0);
    }
}

TEST_CASE("rate supplied as a curve matches the promoted constant") {
    PortfolioParams pc = baseline_params();
    PortfolioParams pg = baseline_params();
    const TimeGrid rg = make_grid(0.0, pg.T, 50);
    pg.r = Rate(GridFunction::constant(rg, 0.02));
    const TimeGrid g = make_grid(0.0, pc.T, 400);
    const CoefficientSet cc = solve_coefficients(pc, g);
    const CoefficientSet cg = solve_coefficients(pg, g);
    for (std::size_t j = 0; j <= 400; j += 40) {
        CHECK(cg.phi[j] == Catch::Approx(cc.phi[j]).margin(1e-14));
        CHECK(cg.k[j] == Catch::Approx(cc.k[j]).margin(1e-14));
    }

    // genuinely time-varying rate still solves with the right terminal data
    std::vector<double> ramp(rg.n_nodes());
    for (std::size_t j = 0; j < ramp.size(); ++j) ramp[j] = 0.01 + 0.03 * rg.node(j);
    PortfolioParams pv = baseline_params();
    pv.r = Rate(GridFunction(rg, std::move(ramp)));
    const CoefficientSet cv = solve_coefficients(pv, g);
    CHECK(cv.phi.values().back() == 0.0);
    CHECK(cv.k.values().back() == -std::log(pv.v));
    CHECK(cv.phi[0] != cc.phi[0]);
}

TEST_CASE("grid mismatch is rejected") {
    const PortfolioParams p = baseline_params();
    const TimeGrid g1 = make_grid(0.0, p.T, 100);
    const TimeGrid g2 = make_grid(0.0, p.T, 200);
    const GridFunction gamma = solve_gamma(p, g1);
    CHECK_THROWS_AS(solve_phi(p, gamma, g2), std::invalid_argument);
    CHECK_THROWS_AS(solve_rho(p, gamma, g2), std::invalid_argument);
    const GridFunction phi = solve_phi(p, gamma, g1);
    CHECK_THROWS_AS(solve_k(p, gamma, phi, g2), std::invalid_argument);
}

TEST_CASE("parameter validation") {
    PortfolioParams p = baseline_params();
    p.sigma = {0.0, 0.0};
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = baseline_params();
    p.theta = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = baseline_params();
    p.v = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("coefficient CSV has five columns and one row per node") {
    const PortfolioParams p = baseline_params();
    const TimeGrid g = make_grid(0.0, p.T, 64);
    const CoefficientSet c = solve_coefficients(p, g);
    std::ostringstream os;
    write_coeffs_csv(c, os);
    std::istringstream in(os.str());
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "t,gamma,phi,k,rho");
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        CHECK(std::count(line.begin(), line.end(), ',') == 4);
    }
    CHECK(rows == g.n_nodes());
}

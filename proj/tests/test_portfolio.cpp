#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "rsoc/philox.hpp"
#include "rsoc/portfolio.hpp"

using namespace rsoc;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig cfg;
    cfg.n_steps = 128;
    cfg.n_paths = 2000;
    cfg.block_size = 1024;
    cfg.n_check_paths = 50;
    cfg.n_hjb_path_points = 200;
    cfg.n_mincond_points = 100;
    cfg.bsde_paths = 1000;
    cfg.theta_sweep.clear();
    return cfg;
}

} // namespace

TEST_CASE("feedback is zero without excess return or factor exposure") {
    PortfolioParams p = baseline_params();
    p.A = 0.0;
    p.a = 0.02;
    p.r = Rate(0.02);
    const TimeGrid ode = make_grid(0.0, p.T, 500);
    const CoefficientSet c = solve_coefficients(p, ode);
    for (double t : {0.0, 0.3, 0.9})
        for (double x : {-2.0, 0.0, 3.0}) CHECK(feedback_mp(t, x, c, p) == 0.0);
}

TEST_CASE("feedback scales like 1/(theta+1) when lambda sigma^T = 0") {
    PortfolioParams p = baseline_params();
    p.lambda = {0.0, 0.4}; // orthogonal to sigma = (0.3, 0)
    REQUIRE(p.lambda_sigma() == 0.0);
    const TimeGrid ode = make_grid(0.0, p.T, 500);
    const double x = 1.3, t = 0.2;
    std::vector<double> scaled;
    for (double theta : {1.0, 4.0, 9.0}) {
        PortfolioParams q = p;
        q.theta = theta;
        const CoefficientSet c = solve_coefficients(q, ode);
        scaled.push_back(feedback_mp(t, x, c, q) * (theta + 1.0));
    }
    // (theta+1) u is theta-free because the Gamma/phi terms drop out with ls = 0
    CHECK(scaled[0] == Catch::Approx(scaled[1]).margin(1e-12));
    CHECK(scaled[1] == Catch::Approx(scaled[2]).margin(1e-12));
}

TEST_CASE("maximum-principle and dynamic-programming feedbacks coincide") {
    const PortfolioParams p = baseline_params();
    const TimeGrid ode = make_grid(0.0, p.T, 2560);
    const CoefficientSet c = solve_coefficients(p, ode);
    const ValueCoefficients vc = make_value_coefficients(c);
    CHECK(vc.psi == &c.gamma);
    CHECK(vc.eta == &c.phi);
    double worst = 0.0;
    for (std::uint32_t i = 0; i < 1000; ++i) {
        const double t = p.T * counter_uniform(61, 0, i, 0, 0);
        const double x = -3.0 + 6.0 * counter_uniform(61, 0, i, 1, 0);
        worst = std::max(worst, std::abs(feedback_mp(t, x, c, p) - feedback_dpp(t, x, vc, p)));
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("feedback agrees with the numerical minimizer of G") {
    const PortfolioParams p = baseline_params();
    const TimeGrid ode = make_grid(0.0, p.T, 2560);
    const CoefficientSet c = solve_coefficients(p, ode);
    const ValueCoefficients vc = make_value_coefficients(c);
    const GeneralProblem prob = make_general_problem(p);
    const struct {
        double t, x;
    } pts[] = {{0.0, 1.0}, {0.5, -1.0}};
    for (const auto& pt : pts) {
        const Vec pv{value_fn_x(pt.t, pt.x, vc)};
        Mat P(1, 1);
        P(0, 0) = value_fn_xx(pt.t, pt.x, vc);
        const MinimizeResult r = minimize_G(pt.t, Vec{pt.x}, pv, P, prob);
        CHECK(std::abs(r.u_star - feedback_mp(pt.t, pt.x, c, p)) <= 1e-8);
    }
}

TEST_CASE("value function: terminal data, x = 0 slice, curvature") {
    const PortfolioParams p = baseline_params();
    const TimeGrid ode = make_grid(0.0, p.T, 1000);
    const CoefficientSet c = solve_coefficients(p, ode);
    const ValueCoefficients vc = make_value_coefficients(c);
    CHECK(value_fn(p.T, 5.0, vc) == -std::log(p.v));
    CHECK(value_fn(p.T, -7.3, vc) == -std::log(p.v));
    for (double t : {0.0, 0.4, 0.8}) {
        CHECK(value_fn(t, 0.0, vc) == c.k(t));
        for (double x : {-2.0, 1.0, 2.5}) CHECK(value_fn_xx(t, x, vc) == c.gamma(t));
    }
}

TEST_CASE("closed-form adjoints: terminal zeros, degenerate zeros, p = V_x") {
    const PortfolioParams p = baseline_params();
    const TimeGrid ode = make_grid(0.0, p.T, 1000);
    const CoefficientSet c = solve_coefficients(p, ode);
    const ValueCoefficients vc = make_value_coefficients(c);

    const AdjointState at_T = adjoint_closed_form(p.T, 2.0, c, p);
    CHECK(at_T.p[0] == 0.0);
    CHECK(at_T.q(0, 0) == 0.0);
    CHECK(at_T.q(0, 1) == 0.0);
    CHECK(at_T.P(0, 0) == 0.0);
    CHECK(at_T.sigma_bar(0, 0) == p.lambda[0]);

    PortfolioParams pz = baseline_params();
    pz.A = 0.0;
    pz.a = 0.02;
    const CoefficientSet cz = solve_coefficients(pz, ode);
    for (double t : {0.0, 0.5, 1.0}) {
        const AdjointState adj = adjoint_closed_form(t, 1.7, cz, pz);
        CHECK(adj.p[0] == 0.0);
        CHECK(adj.q(0, 0) == 0.0);
        CHECK(adj.P(0, 0) == 0.0);
    }

    for (std::uint32_t i = 0; i < 100; ++i) {
        const double t = p.T * counter_uniform(67, 0, i, 0, 0);
        const double x = -3.0 + 6.0 * counter_uniform(67, 0, i, 1, 0);
        const AdjointState adj = adjoint_closed_form(t, x, c, p);
        REQUIRE(adj.p[0] == value_fn_x(t, x, vc));
    }
}

TEST_CASE("relation report: baseline set passes every check") {
    const ExperimentConfig cfg = small_config();
    const RelationReport rep = verify_relations(cfg);
    for (const auto& chk : rep.checks) {
        INFO(chk.name << " worst=" << chk.worst << " tol=" << chk.tol << " at " << chk.location);
        CHECK(chk.pass);
    }
    CHECK(rep.all_pass());
}

TEST_CASE("relation report: A = 0 passes with exact zeros") {
    ExperimentConfig cfg = small_config();
    cfg.params.A = 0.0;
    cfg.params.a = 0.02; // no excess return either
    const RelationReport rep = verify_relations(cfg);
    CHECK(rep.all_pass());
    bool saw_equality_case = false;
    for (const auto& chk : rep.checks)
        if (chk.name == "comparison_equality_case") {
            saw_equality_case = true;
            CHECK(chk.worst == 0.0);
        }
    CHECK(saw_equality_case);
}

TEST_CASE("relation report: swapped Riccati coefficients are caught") {
    const ExperimentConfig cfg = small_config();
    const RelationReport rep = verify_relations(cfg, Fault::swap_gamma_rho);
    CHECK_FALSE(rep.all_pass());
    bool hjb_failed = false;
    for (const auto& chk : rep.checks)
        if (chk.name == "hjb_along_paths" || chk.name == "control_attains_min_G")
            hjb_failed = hjb_failed || !chk.pass;
    CHECK(hjb_failed);
}

TEST_CASE("experiment report: optimality, transform, and value coherence") {
    ExperimentConfig cfg = small_config();
    cfg.n_paths = 20000;
    // at this reduced path count only the larger offsets separate cleanly
    cfg.perturbations = {-0.2, 0.2};
    const ExperimentReport rep = run_experiment(cfg);

    REQUIRE(rep.optimality.size() == 3);
    CHECK(std::is_sorted(rep.optimality.begin(), rep.optimality.end(),
                         [](const OptimalityRow& a, const OptimalityRow& b) {
                             return a.epsilon < b.epsilon;
                         }));
    double j_opt = 0.0;
    for (const auto& row : rep.optimality)
        if (row.epsilon == 0.0) j_opt = row.cost;
    for (const auto& row : rep.optimality) {
        if (row.epsilon == 0.0) continue;
        INFO("eps=" << row.epsilon << " gap=" << row.gap << " gap_se=" << row.gap_se);
        CHECK(row.pass);
        CHECK(row.gap > 0.0);
    }
    CHECK(rep.zero_policy_pass);
    CHECK(j_opt <= rep.zero_policy_cost);
    CHECK(rep.transform_optimal.pass);
    CHECK(rep.transform_constant.pass);
    CHECK(rep.relations.all_pass());
    CHECK(rep.all_pass());

    // Monte-Carlo cost of the optimal policy sits near V(0, x0)
    double se = 0.0;
    for (const auto& row : rep.optimality)
        if (row.epsilon == 0.0) se = row.std_error;
    CHECK(std::abs(j_opt - rep.value_at_origin) <= 5.0 * se + 0.01);
}

TEST_CASE("experiment is reproducible from (config, seed)") {
    ExperimentConfig cfg = small_config();
    cfg.n_paths = 2000;
    cfg.perturbations = {0.2};
    const ExperimentReport a = run_experiment(cfg);
    const ExperimentReport b = run_experiment(cfg);
    REQUIRE(a.optimality.size() == b.optimality.size());
    for (std::size_t i = 0; i < a.optimality.size(); ++i) {
        REQUIRE(a.optimality[i].cost == b.optimality[i].cost);
        REQUIRE(a.optimality[i].gap == b.optimality[i].gap);
    }
    REQUIRE(a.transform_optimal.delta == b.transform_optimal.delta);
    REQUIRE(a.zero_policy_cost == b.zero_policy_cost);
}

TEST_CASE("config validation rejects degenerate setups") {
    ExperimentConfig cfg;
    cfg.n_paths = 10;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = ExperimentConfig{};
    cfg.perturbations = {0.0};
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = ExperimentConfig{};
    cfg.state_lo = 1.0;
    cfg.state_hi = -1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("fault name parsing") {
    CHECK(parse_fault("") == Fault::none);
    CHECK(parse_fault("none") == Fault::none);
    CHECK(parse_fault("swap-gamma-rho") == Fault::swap_gamma_rho);
    CHECK_FALSE(parse_fault("bogus").has_value());
}

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rsoc/hamiltonians.hpp"
#include "rsoc/lq_coeffs.hpp"
#include "rsoc/noise.hpp"
#include "rsoc/params.hpp"
#include "rsoc/risk_cost.hpp"
#include "rsoc/sde.hpp"

namespace rsoc {

// ---------------------------------------------------------------------------
// configuration

struct Tolerances {
    double feedback_eq = 1e-12;     // max |u_MP - u_DPP|
    double hjb_lattice = 1e-6;      // |V_t + min_u G| on the (t, x) lattice
    double hjb_path = 1e-5;         // same residual along simulated paths
    double adjoint_identity = 1e-10; // |p - V_x|, |q - V_xx sigma_bar|
    double comparison = 1e-10;      // min(rho - Gamma) >= -comparison
    double strict_gap = 1e-6;       // rho(0) - Gamma(0) when the forcing is active
    double min_condition = 1e-8;
};

enum class Fault { none, swap_gamma_rho };

inline std::optional<Fault> parse_fault(const std::string& name) {
    if (name.empty() || name == "none") return Fault::none;
    if (name == "swap-gamma-rho") return Fault::swap_gamma_rho;
    return std::nullopt;
}

struct ExperimentConfig {
    PortfolioParams params = baseline_params();
    std::size_t n_steps = 256;
    std::size_t ode_refinement = 10;
    std::size_t n_paths = 100000;
    std::size_t block_size = 16384;
    std::uint64_t seed = 42;
    double x0 = 1.0;
    std::vector<double> perturbations{-0.2, -0.1, -0.05, 0.05, 0.1, 0.2};
    double state_lo = -3.0;
    double state_hi = 3.0;
    double const_policy = 0.5;
    std::size_t n_check_paths = 100;
    std::size_t n_mincond_points = 200;
    std::size_t n_hjb_path_points = 400;
    std::size_t bsde_paths = 4000;
    std::vector<std::size_t> bsde_steps{64, 128, 256};
    std::vector<double> theta_sweep{0.1, 1.0, 5.0};
    std::size_t scan_nt = 20;
    std::size_t scan_nx = 20;
    Tolerances tol;

    TimeGrid sde_grid() const { return TimeGrid(0.0, params.T, n_steps); }
    TimeGrid ode_grid() const { return TimeGrid(0.0, params.T, n_steps * ode_refinement); }

    void validate() const {
        params.validate();
        if (n_paths < 1000)
            throw std::invalid_argument("ExperimentConfig: Monte-Carlo gates need n_paths >= 1000");
        if (block_size < 1) throw std::invalid_argument("ExperimentConfig: block_size >= 1");
        if (ode_refinement < 1) throw std::invalid_argument("ExperimentConfig: ode_refinement >= 1");
        if (!(state_lo < state_hi)) throw std::invalid_argument("ExperimentConfig: empty state box");
        for (double e : perturbations)
            if (e == 0.0)
                throw std::invalid_argument("ExperimentConfig: perturbations must exclude 0");
    }
};

// Disjoint block-index namespaces so every consumer of the stream draws
// independent increments.
namespace blockspace {
inline constexpr std::uint64_t optimality = 0;
inline constexpr std::uint64_t original = 1u << 20;
inline constexpr std::uint64_t transformed = 2u << 20;
inline constexpr std::uint64_t verify = 3u << 20;
inline constexpr std::uint64_t bsde = 4u << 20;
inline constexpr std::uint64_t sweep = 5u << 20;
inline constexpr std::uint64_t policy_stride = 512;
} // namespace blockspace

// ---------------------------------------------------------------------------
// closed forms of the linear-quadratic solution

// View tying the dynamic-programming coefficients to the maximum-principle
// ones: Psi, eta are literally the same grid objects as Gamma, phi.
struct ValueCoefficients {
    const GridFunction* psi = nullptr;
    const GridFunction* eta = nullptr;
    const GridFunction* k = nullptr;
};

inline ValueCoefficients make_value_coefficients(const CoefficientSet& c) {
    return ValueCoefficients{&c.gamma, &c.phi, &c.k};
}

// Optimal feedback from the maximum principle,
//   u(t,x) = [(theta ls Gamma_t + A) x + theta ls phi_t + a - r_t] / ((theta+1) ss).
inline double feedback_mp(double t, double x, const CoefficientSet& coeffs,
                          const PortfolioParams& params) {
    const double ls = params.lambda_sigma();
    return ((params.theta * ls * coeffs.gamma(t) + params.A) * x +
            params.theta * ls * coeffs.phi(t) + params.a - params.r(t)) /
           ((params.theta + 1.0) * params.sigma_sq());
}

// Same law synthesized from the dynamic-programming coefficients.
inline double feedback_dpp(double t, double x, const ValueCoefficients& vc,
                           const PortfolioParams& params) {
    const double ls = params.lambda_sigma();
    return ((params.theta * ls * (*vc.psi)(t) + params.A) * x +
            params.theta * ls * (*vc.eta)(t) + params.a - params.r(t)) /
           ((params.theta + 1.0) * params.sigma_sq());
}

// Quadratic value candidate V(t,x) = Psi_t x^2 / 2 + eta_t x + k_t.
inline double value_fn(double t, double x, const ValueCoefficients& vc) {
    return 0.5 * (*vc.psi)(t) * x * x + (*vc.eta)(t) * x + (*vc.k)(t);
}
inline double value_fn_x(double t, double x, const ValueCoefficients& vc) {
    return (*vc.psi)(t) * x + (*vc.eta)(t);
}
inline double value_fn_xx(double t, double /*x*/, const ValueCoefficients& vc) {
    return (*vc.psi)(t);
}

// Adjoint processes in closed form: p = Gamma x + phi, q = Gamma lambda,
// P = rho, Q = 0, anchored at sigma_bar = lambda.
inline AdjointState adjoint_closed_form(double t, double x, const CoefficientSet& coeffs,
                                        const PortfolioParams& params) {
    AdjointState adj;
    const double g = coeffs.gamma(t);
    adj.p = Vec{g * x + coeffs.phi(t)};
    adj.q = Mat(1, 2);
    adj.q(0, 0) = g * params.lambda[0];
    adj.q(0, 1) = g * params.lambda[1];
    adj.P = Mat(1, 1);
    adj.P(0, 0) = coeffs.rho(t);
    adj.Q = {Mat(1, 1, 0.0), Mat(1, 1, 0.0)};
    adj.sigma_bar = Mat(1, 2);
    adj.sigma_bar(0, 0) = params.lambda[0];
    adj.sigma_bar(0, 1) = params.lambda[1];
    adj.has_sigma_bar = true;
    return adj;
}

// The factor problem in the generic interface: scalar state, planar noise,
// risk weight mu = theta, constant terminal cost -log v.
inline GeneralProblem make_general_problem(const PortfolioParams& params,
                                           ControlBox box = ControlBox{-10.0, 10.0}) {
    GeneralProblem prob;
    prob.n = 1;
    prob.d = 2;
    prob.m = 1;
    prob.mu = params.theta;
    prob.control_box = {box};
    const double th_ls = params.theta * params.lambda_sigma();
    prob.f = [params, th_ls](double /*t*/, const Vec& x, const Vec& u) {
        return Vec{params.b + params.B * x[0] - th_ls * u[0]};
    };
    prob.sigma = [params](double, const Vec&, const Vec&) {
        Mat s(1, 2);
        s(0, 0) = params.lambda[0];
        s(0, 1) = params.lambda[1];
        return s;
    };
    prob.l = [params](double t, const Vec& x, const Vec& u) {
        return portfolio_running_cost(params, t, x[0], u[0]);
    };
    const double klog = -std::log(params.v);
    prob.g = [klog](const Vec&) { return klog; };
    return prob;
}

// Feedback policy as a simulation object; the fault hook deliberately wires
// rho in place of Gamma so verification has something to catch.
inline ScalarPolicy make_optimal_policy(const CoefficientSet& coeffs, const PortfolioParams& params,
                                        double offset = 0.0, Fault fault = Fault::none) {
    CoefficientSet local = coeffs;
    if (fault == Fault::swap_gamma_rho) std::swap(local.gamma, local.rho);
    std::string label = offset == 0.0 ? "optimal" : "optimal" + std::to_string(offset);
    return ScalarPolicy{
        [local, params, offset](double t, double x) {
            return feedback_mp(t, x, local, params) + offset;
        },
        std::move(label)};
}

inline ScalarPolicy make_constant_policy(double u) {
    return ScalarPolicy{[u](double, double) { return u; }, "constant " + std::to_string(u)};
}

// Nodewise time derivative of the value coefficients (second-order
// differences, one-sided at the ends); feeds the HJB residual checks.
struct ValueTimeDerivative {
    GridFunction dpsi;
    GridFunction deta;
    GridFunction dk;

    double operator()(double t, double x) const {
        return 0.5 * dpsi(t) * x * x + deta(t) * x + dk(t);
    }
};

namespace detail {
inline GridFunction differentiate_nodes(const GridFunction& f) {
    const TimeGrid& g = f.grid();
    const std::size_t n = g.n_steps();
    const double dt = g.dt();
    const auto& v = f.values();
    std::vector<double> d(n + 1);
    d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dt);
    for (std::size_t j = 1; j < n; ++j) d[j] = (v[j + 1] - v[j - 1]) / (2.0 * dt);
    d[n] = (3.0 * v[n] - 4.0 * v[n - 1] + v[n - 2]) / (2.0 * dt);
    return GridFunction(g, std::move(d));
}
} // namespace detail

inline ValueTimeDerivative make_value_time_derivative(const CoefficientSet& coeffs) {
    return ValueTimeDerivative{detail::differentiate_nodes(coeffs.gamma),
                               detail::differentiate_nodes(coeffs.phi),
                               detail::differentiate_nodes(coeffs.k)};
}

// ---------------------------------------------------------------------------
// relation verification

struct RelationCheck {
    std::string name;
    double worst = 0.0;
    double tol = 0.0;
    std::string location;
    bool pass = false;
};

struct RelationReport {
    std::vector<RelationCheck> checks;
    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

namespace detail {

struct BlockRange {
    std::uint64_t index;
    std::size_t offset;
    std::size_t count;
};

inline std::vector<BlockRange> split_blocks(std::size_t n_paths, std::size_t block_size) {
    std::vector<BlockRange> out;
    std::size_t offset = 0;
    std::uint64_t b = 0;
    while (offset < n_paths) {
        const std::size_t count = std::min(block_size, n_paths - offset);
        out.push_back({b, offset, count});
        offset += count;
        ++b;
    }
    return out;
}

} // namespace detail

inline RelationReport verify_relations(const ExperimentConfig& cfg, Fault fault = Fault::none) {
    cfg.validate();
    const PortfolioParams& params = cfg.params;
    const TimeGrid ode = cfg.ode_grid();
    const TimeGrid sde = cfg.sde_grid();
    const CoefficientSet coeffs = solve_coefficients(params, ode);
    const ValueCoefficients vc = make_value_coefficients(coeffs);
    const GeneralProblem problem = make_general_problem(params);
    const ValueTimeDerivative vt = make_value_time_derivative(coeffs);
    const ScalarPolicy policy = make_optimal_policy(coeffs, params, 0.0, fault);

    RelationReport rep;
    auto add = [&rep](std::string name, double worst, double tol, std::string loc, bool pass) {
        rep.checks.push_back({std::move(name), worst, tol, std::move(loc), pass});
    };

    auto noise = generate_noise(sde, cfg.n_check_paths, 2, cfg.seed, blockspace::verify);
    const SamplePaths paths = simulate_factor_transformed(params, policy, cfg.x0, noise);
    const std::size_t steps = sde.n_steps();

    // (a) HJB along the trajectory: V_t + G(u_bar) = 0 and u_bar attains min_u G
    {
        double worst_res = 0.0, worst_gap = 0.0;
        std::string loc_res = "-", loc_gap = "-";
        for (std::size_t i = 0; i < cfg.n_hjb_path_points; ++i) {
            const std::size_t p = i % cfg.n_check_paths;
            const std::size_t k = (i * 7919 + 11) % steps;
            const double t = sde.node(k);
            const double x = paths.state(p, k, 0);
            const Vec xv{x};
            const Vec pv{value_fn_x(t, x, vc)};
            Mat P(1, 1);
            P(0, 0) = value_fn_xx(t, x, vc);
            const double g_applied = eval_G(t, xv, Vec{paths.control(p, k)}, pv, P, problem);
            const double res = std::abs(vt(t, x) + g_applied);
            const MinimizeResult mg = minimize_G(t, xv, pv, P, problem);
            const double gap = std::abs(g_applied - mg.value);
            if (res > worst_res) {
                worst_res = res;
                loc_res = "t=" + std::to_string(t) + " x=" + std::to_string(x);
            }
            if (gap > worst_gap) {
                worst_gap = gap;
                loc_gap = "t=" + std::to_string(t) + " x=" + std::to_string(x);
            }
        }
        add("hjb_along_paths", worst_res, cfg.tol.hjb_path, loc_res, worst_res <= cfg.tol.hjb_path);
        add("control_attains_min_G", worst_gap, cfg.tol.hjb_path, loc_gap,
            worst_gap <= cfg.tol.hjb_path);
    }

    // (b) first-order relation p = V_x, q = V_xx sigma_bar at every node
    {
        double worst = 0.0;
        std::string loc = "-";
        for (std::size_t p = 0; p < paths.n_paths; ++p)
            for (std::size_t k = 0; k <= steps; ++k) {
                const double t = sde.node(k);
                const double x = paths.state(p, k, 0);
                const AdjointState adj = adjoint_closed_form(t, x, coeffs, params);
                const double vxx = value_fn_xx(t, x, vc);
                double d = std::abs(adj.p[0] - value_fn_x(t, x, vc));
                d = std::max(d, std::abs(adj.q(0, 0) - vxx * params.lambda[0]));
                d = std::max(d, std::abs(adj.q(0, 1) - vxx * params.lambda[1]));
                if (d > worst) {
                    worst = d;
                    loc = "path=" + std::to_string(p) + " k=" + std::to_string(k);
                }
            }
        add("adjoint_identities", worst, cfg.tol.adjoint_identity, loc,
            worst <= cfg.tol.adjoint_identity);
    }

    // (c) second-order relation Gamma <= rho on the coefficient grid
    {
        double min_gap = std::numeric_limits<double>::infinity();
        double forcing_max = 0.0;
        std::string loc = "-";
        const double th_ls = params.theta * params.lambda_sigma();
        for (std::size_t j = 0; j < ode.n_nodes(); ++j) {
            const double gap = coeffs.rho[j] - coeffs.gamma[j];
            if (gap < min_gap) {
                min_gap = gap;
                loc = "t=" + std::to_string(ode.node(j));
            }
            const double force = th_ls * coeffs.gamma[j] + params.A;
            forcing_max = std::max(forcing_max, force * force);
        }
        add("comparison_rho_gamma", min_gap, cfg.tol.comparison, loc,
            min_gap >= -cfg.tol.comparison);
        if (forcing_max > 0.0) {
            const double gap0 = coeffs.rho[0] - coeffs.gamma[0];
            add("comparison_strict_gap", gap0, cfg.tol.strict_gap, "t=0",
                gap0 >= cfg.tol.strict_gap);
        } else {
            double worst = 0.0;
            for (std::size_t j = 0; j < ode.n_nodes(); ++j)
                worst = std::max(worst, std::abs(coeffs.rho[j] - coeffs.gamma[j]));
            add("comparison_equality_case", worst, 0.0, "whole grid", worst <= 0.0);
        }
    }

    // (d) pointwise minimum condition along the trajectory
    {
        double worst = -std::numeric_limits<double>::infinity();
        double var_min = std::numeric_limits<double>::infinity();
        std::string loc = "-";
        for (std::size_t i = 0; i < cfg.n_mincond_points; ++i) {
            const std::size_t p = i % cfg.n_check_paths;
            const std::size_t k = (i * 6007 + 3) % steps;
            const double t = sde.node(k);
            const double x = paths.state(p, k, 0);
            const AdjointState adj = adjoint_closed_form(t, x, coeffs, params);
            const MinimumConditionReport mc = check_minimum_condition(
                t, Vec{x}, Vec{paths.control(p, k)}, adj, problem, 1001, cfg.tol.min_condition);
            if (mc.worst_violation > worst) {
                worst = mc.worst_violation;
                loc = "t=" + std::to_string(t) + " x=" + std::to_string(x);
            }
            var_min = std::min(var_min, mc.variational_min);
        }
        add("minimum_condition", worst, cfg.tol.min_condition, loc,
            worst <= cfg.tol.min_condition);
        add("variational_inequality", var_min, cfg.tol.min_condition, loc,
            var_min >= -cfg.tol.min_condition);
    }

    // (e) backward-equation residual shrinks with the step size
    {
        std::vector<double> means;
        double terminal_worst = 0.0;
        for (std::size_t idx = 0; idx < cfg.bsde_steps.size(); ++idx) {
            const std::size_t n = cfg.bsde_steps[idx];
            const TimeGrid grid_n(0.0, params.T, n);
            const TimeGrid ode_n(0.0, params.T, n * cfg.ode_refinement);
            const CoefficientSet cs = solve_coefficients(params, ode_n);
            const ValueCoefficients vcn = make_value_coefficients(cs);
            const ScalarPolicy pol = make_optimal_policy(cs, params, 0.0, fault);
            auto nb = generate_noise(grid_n, cfg.bsde_paths, 2, cfg.seed,
                                     blockspace::bsde + idx * blockspace::policy_stride);
            const SamplePaths sp = simulate_factor_transformed(params, pol, cfg.x0, nb);
            const BsdeCheck chk = bsde_residual_check(
                sp, [&](double t, double x) { return value_fn(t, x, vcn); },
                [&](double t, double x) { return value_fn_x(t, x, vcn); }, params,
                [&](double) { return -std::log(params.v); });
            means.push_back(chk.mean_abs_total);
            terminal_worst = std::max(terminal_worst, chk.max_terminal_violation);
        }
        double worst_increase = -std::numeric_limits<double>::infinity();
        double largest = 0.0;
        for (std::size_t i = 0; i + 1 < means.size(); ++i)
            worst_increase = std::max(worst_increase, means[i + 1] - means[i]);
        for (double m : means) largest = std::max(largest, m);
        // degenerate markets leave only rounding noise; no trend to measure then
        const bool at_floor = largest <= 1e-13;
        add("bsde_residual_trend", at_floor ? largest : worst_increase, 0.0, "dt halvings",
            at_floor || worst_increase < 0.0);
        add("bsde_terminal_identity", terminal_worst, 0.0, "terminal nodes",
            terminal_worst <= 0.0);
    }

    return rep;
}

// ---------------------------------------------------------------------------
// end-to-end experiment

struct OptimalityRow {
    double epsilon = 0.0;
    double cost = 0.0;     // J = -J~ (cost form, minimized by the optimal feedback)
    double std_error = 0.0;
    double gap = 0.0;      // J(eps) - J(0), paired on common random numbers
    double gap_se = 0.0;
    bool pass = true;      // gap >= 2 gap_se (rows with eps != 0)
};

struct ThetaSweepRow {
    double theta = 0.0;
    double cost = 0.0;
    double std_error = 0.0;
};

struct ExperimentReport {
    CoefficientSet coeffs;
    RelationReport relations;
    std::vector<OptimalityRow> optimality;
    double zero_policy_cost = 0.0;
    double zero_policy_se = 0.0;
    bool zero_policy_pass = false; // J(optimal) <= J(0)
    TransformConsistency transform_optimal;
    TransformConsistency transform_constant;
    std::vector<ThetaSweepRow> theta_sweep;
    double value_at_origin = 0.0; // V(0, x0)
    double const_policy = 0.0;
    double seconds_coeffs = 0.0;
    double seconds_relations = 0.0;
    double seconds_optimality = 0.0;
    double seconds_transform = 0.0;
    double seconds_total = 0.0;

    bool all_pass() const {
        if (!relations.all_pass()) return false;
        for (const auto& row : optimality)
            if (!row.pass) return false;
        return zero_policy_pass && transform_optimal.pass && transform_constant.pass;
    }
};

namespace detail {

// Terminal log-wealth of every path under each policy, all policies fed the
// same noise blocks (common random numbers), merged in fixed block order.
inline std::vector<std::vector<double>> collect_logv_crn(
    const PortfolioParams& params, const std::vector<ScalarPolicy>& policies, double x0,
    const TimeGrid& grid, std::size_t n_paths, std::size_t block_size, std::uint64_t seed,
    std::uint64_t block_base) {
    std::vector<std::vector<double>> lv(policies.size(), std::vector<double>(n_paths));
    for (const BlockRange& blk : split_blocks(n_paths, block_size)) {
        auto noise = generate_noise(grid, blk.count, 2, seed, block_base + blk.index);
        for (std::size_t pol = 0; pol < policies.size(); ++pol) {
            const SamplePaths sp = simulate_wealth_original(params, policies[pol], x0, params.v, noise);
            const std::size_t last = grid.n_steps();
            for (std::size_t p = 0; p < blk.count; ++p)
                lv[pol][blk.offset + p] = sp.state(p, last, 1);
        }
    }
    return lv;
}

inline std::vector<double> collect_running_costs(const PortfolioParams& params,
                                                 const ScalarPolicy& policy, double x0,
                                                 const TimeGrid& grid, std::size_t n_paths,
                                                 std::size_t block_size, std::uint64_t seed,
                                                 std::uint64_t block_base) {
    std::vector<double> totals(n_paths);
    for (const BlockRange& blk : split_blocks(n_paths, block_size)) {
        auto noise = generate_noise(grid, blk.count, 2, seed, block_base + blk.index);
        const SamplePaths sp = simulate_factor_transformed(params, policy, x0, noise);
        const CostSamples cs = accumulate_running_cost(
            sp,
            [&](double t, const Vec& x, double u) { return portfolio_running_cost(params, t, x[0], u); },
            grid);
        for (std::size_t p = 0; p < blk.count; ++p) totals[blk.offset + p] = cs.running[p];
    }
    return totals;
}

// Cost of a policy from terminal log-wealth: J = theta^{-1} log E exp(-theta log V_T).
inline RiskEstimate cost_from_logv(const std::vector<double>& lv, double theta) {
    RiskEstimate est = risk_estimate_from_totals(lv, -theta);
    est.value = -est.value;
    return est;
}

// Paired difference J(a) - J(b) on common random numbers, delta-method SE
// with the covariance term.
inline std::pair<double, double> paired_cost_gap(const std::vector<double>& lv_a,
                                                 const std::vector<double>& lv_b, double theta) {
    const std::size_t n = lv_a.size();
    double ma = -std::numeric_limits<double>::infinity();
    double mb = ma;
    for (std::size_t i = 0; i < n; ++i) {
        ma = std::max(ma, -theta * lv_a[i]);
        mb = std::max(mb, -theta * lv_b[i]);
    }
    double sa = 0.0, sb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double wa = std::exp(-theta * lv_a[i] - ma);
        const double wb = std::exp(-theta * lv_b[i] - mb);
        sa += wa;
        sb += wb;
        saa += wa * wa;
        sbb += wb * wb;
        sab += wa * wb;
    }
    const double nA = static_cast<double>(n);
    const double mean_a = sa / nA, mean_b = sb / nA;
    const double var_a = std::max(0.0, saa / nA - mean_a * mean_a);
    const double var_b = std::max(0.0, sbb / nA - mean_b * mean_b);
    const double cov = sab / nA - mean_a * mean_b;
    const double gap = ((ma + std::log(mean_a)) - (mb + std::log(mean_b))) / theta;
    const double rel = std::max(0.0, var_a / (mean_a * mean_a) + var_b / (mean_b * mean_b) -
                                         2.0 * cov / (mean_a * mean_b));
    const double se = std::sqrt(rel / nA) / theta;
    return {gap, se};
}

} // namespace detail

inline ExperimentReport run_experiment(const ExperimentConfig& cfg, Fault fault = Fault::none) {
    using clock = std::chrono::steady_clock;
    const auto t_begin = clock::now();
    auto elapsed = [](clock::time_point a, clock::time_point b) {
        return std::chrono::duration<double>(b - a).count();
    };
    cfg.validate();
    const PortfolioParams& params = cfg.params;
    const TimeGrid sde = cfg.sde_grid();

    ExperimentReport rep;
    rep.const_policy = cfg.const_policy;

    auto t0 = clock::now();
    rep.coeffs = solve_coefficients(params, cfg.ode_grid());
    const ValueCoefficients vc = make_value_coefficients(rep.coeffs);
    rep.value_at_origin = value_fn(0.0, cfg.x0, vc);
    rep.seconds_coeffs = elapsed(t0, clock::now());

    t0 = clock::now();
    rep.relations = verify_relations(cfg, fault);
    rep.seconds_relations = elapsed(t0, clock::now());

    // perturbation study under common random numbers
    t0 = clock::now();
    std::vector<double> eps_sorted = cfg.perturbations;
    std::sort(eps_sorted.begin(), eps_sorted.end());
    std::vector<ScalarPolicy> policies;
    policies.push_back(make_optimal_policy(rep.coeffs, params, 0.0, fault));
    for (double e : eps_sorted) policies.push_back(make_optimal_policy(rep.coeffs, params, e, fault));
    policies.push_back(make_constant_policy(0.0));
    const auto lv = detail::collect_logv_crn(params, policies, cfg.x0, sde, cfg.n_paths,
                                             cfg.block_size, cfg.seed, blockspace::optimality);
    {
        const RiskEstimate base = detail::cost_from_logv(lv[0], params.theta);
        OptimalityRow row0;
        row0.epsilon = 0.0;
        row0.cost = base.value;
        row0.std_error = base.std_error;
        rep.optimality.push_back(row0);
        for (std::size_t i = 0; i < eps_sorted.size(); ++i) {
            const RiskEstimate est = detail::cost_from_logv(lv[i + 1], params.theta);
            OptimalityRow row;
            row.epsilon = eps_sorted[i];
            row.cost = est.value;
            row.std_error = est.std_error;
            const auto [gap, se] = detail::paired_cost_gap(lv[i + 1], lv[0], params.theta);
            row.gap = gap;
            row.gap_se = se;
            row.pass = gap >= 2.0 * se;
            rep.optimality.push_back(row);
        }
        std::sort(rep.optimality.begin(), rep.optimality.end(),
                  [](const OptimalityRow& a, const OptimalityRow& b) { return a.epsilon < b.epsilon; });
        const RiskEstimate zero = detail::cost_from_logv(lv.back(), params.theta);
        rep.zero_policy_cost = zero.value;
        rep.zero_policy_se = zero.std_error;
        rep.zero_policy_pass = base.value <= zero.value;
    }
    rep.seconds_optimality = elapsed(t0, clock::now());

    // measure-change consistency for the optimal and one constant policy
    t0 = clock::now();
    auto run_transform = [&](const ScalarPolicy& policy,
                             std::uint64_t lane) {
        TransformConsistency tc;
        const auto lv_orig =
            detail::collect_logv_crn(params, {policy}, cfg.x0, sde, cfg.n_paths, cfg.block_size,
                                     cfg.seed, blockspace::original + lane)[0];
        const RiskEstimate a = detail::risk_estimate_from_totals(lv_orig, -params.theta);
        const auto costs = detail::collect_running_costs(params, policy, cfg.x0, sde, cfg.n_paths,
                                                         cfg.block_size, cfg.seed,
                                                         blockspace::transformed + lane);
        const RiskEstimate b = detail::risk_estimate_from_totals(costs, params.theta);
        tc.growth_original = a.value;
        tc.se_original = a.std_error;
        tc.growth_transformed = std::log(params.v) - b.value;
        tc.se_transformed = b.std_error;
        tc.delta = std::abs(tc.growth_original - tc.growth_transformed);
        tc.combined_se = std::sqrt(a.std_error * a.std_error + b.std_error * b.std_error);
        tc.pass = tc.delta <= std::max(3.0 * tc.combined_se, 1e-12);
        return tc;
    };
    rep.transform_optimal = run_transform(policies[0], 0);
    rep.transform_constant =
        run_transform(make_constant_policy(cfg.const_policy), blockspace::policy_stride);
    rep.seconds_transform = elapsed(t0, clock::now());

    // risk-aversion sweep, reported for inspection only
    for (std::size_t i = 0; i < cfg.theta_sweep.size(); ++i) {
        PortfolioParams swept = params;
        swept.theta = cfg.theta_sweep[i];
        const CoefficientSet cs = solve_coefficients(swept, cfg.ode_grid());
        const ScalarPolicy pol = make_optimal_policy(cs, swept);
        const auto lv_sweep =
            detail::collect_logv_crn(swept, {pol}, cfg.x0, sde, cfg.n_paths, cfg.block_size,
                                     cfg.seed, blockspace::sweep + i * blockspace::policy_stride)[0];
        const RiskEstimate est = detail::cost_from_logv(lv_sweep, swept.theta);
        rep.theta_sweep.push_back({swept.theta, est.value, est.std_error});
    }

    rep.seconds_total = elapsed(t_begin, clock::now());
    return rep;
}

// Residual scan of the dynamic-programming equation over a (t, x) lattice.
struct HjbScanPoint {
    double t = 0.0;
    double x = 0.0;
    double residual = 0.0;
    double u_star = 0.0;
};

inline std::vector<HjbScanPoint> hjb_scan(const ExperimentConfig& cfg, std::size_t nt,
                                          std::size_t nx) {
    cfg.validate();
    if (nt < 2 || nx < 2) throw std::invalid_argument("hjb_scan: need at least a 2x2 lattice");
    const TimeGrid ode = cfg.ode_grid();
    const CoefficientSet coeffs = solve_coefficients(cfg.params, ode);
    const ValueCoefficients vc = make_value_coefficients(coeffs);
    const ValueTimeDerivative vt = make_value_time_derivative(coeffs);
    const GeneralProblem problem = make_general_problem(cfg.params);
    std::vector<HjbScanPoint> out;
    out.reserve(nt * nx);
    for (std::size_t i = 0; i < nt; ++i) {
        // lattice times snapped to coefficient-grid nodes
        const std::size_t j = (i * ode.n_steps()) / (nt - 1);
        const double t = ode.node(j);
        for (std::size_t ix = 0; ix < nx; ++ix) {
            const double x = cfg.state_lo + (cfg.state_hi - cfg.state_lo) *
                                                static_cast<double>(ix) /
                                                static_cast<double>(nx - 1);
            const Vec pv{value_fn_x(t, x, vc)};
            Mat P(1, 1);
            P(0, 0) = value_fn_xx(t, x, vc);
            const MinimizeResult mg = minimize_G(t, Vec{x}, pv, P, problem);
            out.push_back({t, x, vt(t, x) + mg.value, mg.u_star});
        }
    }
    return out;
}

} // namespace rsoc

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "rsoc/params.hpp"
#include "rsoc/sde.hpp"

namespace rsoc {

// Per-path cost decomposition: left-Riemann running integral of l plus the
// terminal cost.
struct CostSamples {
    std::vector<double> running;
    std::vector<double> terminal;

    std::size_t n_paths() const { return running.size(); }
    double total(std::size_t i) const { return running[i] + terminal[i]; }
};

struct RiskEstimate {
    double value = 0.0;
    double std_error = 0.0;
    double mu = 0.0;
    std::size_t n_paths = 0;
};

// log( (1/n) sum exp(a_i) ), max-shifted.
inline double log_mean_exp(const std::vector<double>& a) {
    if (a.empty()) throw std::invalid_argument("log_mean_exp: empty sample");
    const double m = *std::max_element(a.begin(), a.end());
    double s = 0.0;
    for (double x : a) s += std::exp(x - m);
    return m + std::log(s / static_cast<double>(a.size()));
}

// Terminal cost g(X_T) per path, appended to existing cost samples.
inline void add_terminal_cost(CostSamples& samples, const SamplePaths& paths,
                              const std::function<double(const Vec&)>& g) {
    if (samples.n_paths() != paths.n_paths)
        throw std::invalid_argument("add_terminal_cost: sample count mismatch");
    const std::size_t last = paths.grid.n_steps();
    Vec x(paths.state_dim);
    for (std::size_t p = 0; p < paths.n_paths; ++p) {
        for (std::size_t c = 0; c < paths.state_dim; ++c) x[c] = paths.state(p, last, c);
        samples.terminal[p] = g(x);
    }
}

// Left-endpoint Riemann sum of l(t_k, X_k, u_k) along each path. The state
// passed to l is the full state vector of the ensemble.
inline CostSamples accumulate_running_cost(
    const SamplePaths& paths,
    const std::function<double(double, const Vec&, double)>& l, const TimeGrid& grid) {
    if (grid != paths.grid)
        throw std::invalid_argument("accumulate_running_cost: grid mismatch");
    if (paths.controls.empty() && grid.n_steps() > 0)
        throw std::invalid_argument("accumulate_running_cost: paths carry no controls");
    CostSamples out;
    out.running.resize(paths.n_paths, 0.0);
    out.terminal.assign(paths.n_paths, 0.0);
    const double dt = grid.dt();
    Vec x(paths.state_dim);
    for (std::size_t p = 0; p < paths.n_paths; ++p) {
        double acc = 0.0;
        for (std::size_t k = 0; k < grid.n_steps(); ++k) {
            for (std::size_t c = 0; c < paths.state_dim; ++c) x[c] = paths.state(p, k, c);
            acc += l(grid.node(k), x, paths.control(p, k)) * dt;
        }
        out.running[p] = acc;
    }
    return out;
}

namespace detail {

// Core of the exponential-moment estimator on raw totals J_i:
//   value = mu^{-1} log mean exp(mu J),  SE by the delta method,
//   sd(exp(mu J)) / (|mu| * mean(exp(mu J)) * sqrt(n)),
// all computed on max-shifted weights so overflow cannot occur.
inline RiskEstimate risk_estimate_from_totals(const std::vector<double>& totals, double mu) {
    if (mu == 0.0)
        throw std::invalid_argument("estimate_risk_sensitive: mu = 0 (use the plain-mean route)");
    if (totals.empty()) throw std::invalid_argument("estimate_risk_sensitive: empty sample");
    for (double j : totals)
        if (!std::isfinite(j)) throw std::invalid_argument("estimate_risk_sensitive: non-finite sample");
    const std::size_t n = totals.size();
    double m = -std::numeric_limits<double>::infinity();
    for (double j : totals) m = std::max(m, mu * j);
    double sw = 0.0, sw2 = 0.0;
    for (double j : totals) {
        const double w = std::exp(mu * j - m);
        sw += w;
        sw2 += w * w;
    }
    const double mean_w = sw / static_cast<double>(n);
    const double var_w = std::max(0.0, sw2 / static_cast<double>(n) - mean_w * mean_w);
    RiskEstimate est;
    est.mu = mu;
    est.n_paths = n;
    est.value = (m + std::log(mean_w)) / mu;
    est.std_error = std::sqrt(var_w) / (std::abs(mu) * mean_w * std::sqrt(static_cast<double>(n)));
    return est;
}

inline RiskEstimate mean_estimate_from_totals(const std::vector<double>& totals) {
    if (totals.empty()) throw std::invalid_argument("estimate_mean: empty sample");
    const std::size_t n = totals.size();
    double s = 0.0;
    for (double j : totals) s += j;
    const double mean = s / static_cast<double>(n);
    double v = 0.0;
    for (double j : totals) v += (j - mean) * (j - mean);
    RiskEstimate est;
    est.mu = 0.0;
    est.n_paths = n;
    est.value = mean;
    est.std_error = n > 1 ? std::sqrt(v / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
    return est;
}

} // namespace detail

inline RiskEstimate estimate_risk_sensitive(const CostSamples& samples, double mu) {
    std::vector<double> totals(samples.n_paths());
    for (std::size_t i = 0; i < totals.size(); ++i) totals[i] = samples.total(i);
    return detail::risk_estimate_from_totals(totals, mu);
}

inline RiskEstimate estimate_risk_sensitive(const std::vector<double>& totals, double mu) {
    return detail::risk_estimate_from_totals(totals, mu);
}

// Risk-neutral route, kept separate from the mu != 0 estimator.
inline RiskEstimate estimate_mean(const std::vector<double>& totals) {
    return detail::mean_estimate_from_totals(totals);
}

// Risk-sensitive expected growth rate -theta^{-1} log E exp(-theta log V_T),
// i.e. the exponential-moment estimator applied to log V_T at mu = -theta.
inline RiskEstimate estimate_growth_rate(const SamplePaths& wealth_paths, double theta) {
    if (wealth_paths.state_dim < 2)
        throw std::invalid_argument("estimate_growth_rate: paths carry no log-wealth component");
    std::vector<double> lv(wealth_paths.n_paths);
    const std::size_t last = wealth_paths.grid.n_steps();
    for (std::size_t p = 0; p < wealth_paths.n_paths; ++p) lv[p] = wealth_paths.state(p, last, 1);
    return detail::risk_estimate_from_totals(lv, -theta);
}

// Running cost of the portfolio problem,
//   l(s, x, u) = (theta+1)/2 ss u^2 - r_s - u (a + A x - r_s).
inline double portfolio_running_cost(const PortfolioParams& params, double t, double x, double u) {
    return 0.5 * (params.theta + 1.0) * params.sigma_sq() * u * u - params.r(t) -
           u * (params.a + params.A * x - params.r(t));
}

struct TransformConsistency {
    double growth_original = 0.0;    // -theta^{-1} log E exp(-theta log V_T) under the original measure
    double se_original = 0.0;
    double growth_transformed = 0.0; // log v - theta^{-1} log E exp(theta int l) under the new measure
    double se_transformed = 0.0;
    double delta = 0.0;
    double combined_se = 0.0;
    bool pass = false;
};

// Girsanov consistency: the growth rate estimated from original-measure
// wealth paths must agree with the transformed-measure expression within
// Monte-Carlo error. The two noise blocks must be independent.
inline TransformConsistency transform_consistency(const PortfolioParams& params,
                                                  const ScalarPolicy& policy, double x0,
                                                  std::shared_ptr<const NoiseBlock> noise_original,
                                                  std::shared_ptr<const NoiseBlock> noise_transformed) {
    TransformConsistency rep;
    const SamplePaths wealth = simulate_wealth_original(params, policy, x0, params.v, noise_original);
    const RiskEstimate a = estimate_growth_rate(wealth, params.theta);
    rep.growth_original = a.value;
    rep.se_original = a.std_error;

    const SamplePaths factor = simulate_factor_transformed(params, policy, x0, noise_transformed);
    const CostSamples costs = accumulate_running_cost(
        factor,
        [&](double t, const Vec& x, double u) { return portfolio_running_cost(params, t, x[0], u); },
        factor.grid);
    const RiskEstimate b = estimate_risk_sensitive(costs, params.theta);
    rep.growth_transformed = std::log(params.v) - b.value;
    rep.se_transformed = b.std_error;

    rep.delta = std::abs(rep.growth_original - rep.growth_transformed);
    rep.combined_se = std::sqrt(a.std_error * a.std_error + b.std_error * b.std_error);
    rep.pass = rep.delta <= std::max(3.0 * rep.combined_se, 1e-12);
    return rep;
}

// Pathwise residuals of the quadratic-growth backward equation for the
// candidate pair Y_s = V(s, X_s), Z_s = V_x(s, X_s) sigma(s, X_s, u_s):
//   residual_k = Y_{k+1} - Y_k + (l + (mu/2)|Z|^2) dt - Z dW_k.
struct BsdeCheck {
    std::vector<double> total_residual;  // per path, sum over steps
    std::vector<double> step_rms;        // per step, RMS over paths
    double mean_abs_total = 0.0;
    double rms_step = 0.0;
    double max_terminal_violation = 0.0; // max |Y_N - g(X_N)|
};

inline BsdeCheck bsde_residual_check(
    const SamplePaths& paths, const std::function<double(double, double)>& V,
    const std::function<double(double, double)>& V_x, const PortfolioParams& params,
    const std::function<double(double)>& terminal_cost) {
    if (!paths.noise) throw std::invalid_argument("bsde_residual_check: paths carry no noise block");
    const TimeGrid& g = paths.grid;
    const double dt = g.dt();
    const double mu = params.theta;
    const double l0 = params.lambda[0], l1 = params.lambda[1];
    BsdeCheck out;
    out.total_residual.assign(paths.n_paths, 0.0);
    out.step_rms.assign(g.n_steps(), 0.0);
    double sum_sq = 0.0;
    for (std::size_t p = 0; p < paths.n_paths; ++p) {
        double y = V(g.node(0), paths.state(p, 0, 0));
        double total = 0.0;
        for (std::size_t k = 0; k < g.n_steps(); ++k) {
            const double t = g.node(k);
            const double x = paths.state(p, k, 0);
            const double y_next = V(g.node(k + 1), paths.state(p, k + 1, 0));
            const double vx = V_x(t, x);
            const double z0 = vx * l0, z1 = vx * l1;
            const double driver = portfolio_running_cost(params, t, x, paths.control(p, k)) +
                                  0.5 * mu * (z0 * z0 + z1 * z1);
            const double res = y_next - y + driver * dt -
                               (z0 * paths.noise->dw(p, k, 0) + z1 * paths.noise->dw(p, k, 1));
            total += res;
            out.step_rms[k] += res * res;
            sum_sq += res * res;
            y = y_next;
        }
        out.total_residual[p] = total;
        out.mean_abs_total += std::abs(total);
        const double term = std::abs(y - terminal_cost(paths.state(p, g.n_steps(), 0)));
        out.max_terminal_violation = std::max(out.max_terminal_violation, term);
    }
    const auto n = static_cast<double>(paths.n_paths);
    out.mean_abs_total /= n;
    for (double& s : out.step_rms) s = std::sqrt(s / n);
    out.rms_step = std::sqrt(sum_sq / (n * static_cast<double>(g.n_steps())));
    return out;
}

} // namespace rsoc

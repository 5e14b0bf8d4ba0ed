#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "rsoc/problem.hpp"

namespace rsoc {

// Generalized Hamiltonian
//   G(t,x,u,p,P) = l + <p, f> + (mu/2)|sigma^T p|^2 + (1/2) tr(sigma sigma^T P).
inline double eval_G(double t, const Vec& x, const Vec& u, const Vec& p, const Mat& P,
                     const GeneralProblem& problem) {
    const Vec f = problem.f(t, x, u);
    const Mat s = problem.sigma(t, x, u);
    double g = problem.l(t, x, u) + dot(p, f);
    for (std::size_t j = 0; j < problem.d; ++j) {
        const Vec sj = s.col(j);
        const double sp = dot(sj, p);
        g += 0.5 * problem.mu * sp * sp;
        g += 0.5 * quad_form(P, sj);
    }
    return g;
}

// Hamiltonian anchored at the candidate-optimal diffusion sigma_bar:
//   H(s,x,u,p,q) = <p, f> + l + sum_j q_j^T sigma_j + mu sum_j (sigma_j^T p)(sigma_bar_j^T p).
inline double eval_H(double s, const Vec& x, const Vec& u, const AdjointState& adj,
                     const GeneralProblem& problem) {
    adj.require_sigma_bar();
    const Vec f = problem.f(s, x, u);
    const Mat sg = problem.sigma(s, x, u);
    double h = dot(adj.p, f) + problem.l(s, x, u);
    for (std::size_t j = 0; j < problem.d; ++j) {
        const Vec sj = sg.col(j);
        h += dot(adj.q.col(j), sj);
        h += problem.mu * dot(sj, adj.p) * dot(adj.sigma_bar.col(j), adj.p);
    }
    return h;
}

namespace detail {
// (P + mu p p^T) as a dense matrix
inline Mat weight_matrix(const AdjointState& adj, double mu) {
    const std::size_t n = adj.p.size();
    Mat w(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) w(i, j) = adj.P(i, j) + mu * adj.p[i] * adj.p[j];
    return w;
}
} // namespace detail

// The script-H function used in the pointwise minimum condition:
//   Hcal = H - (1/2) tr[sb^T (P + mu p p^T) sb]
//        + (1/2) tr[(sigma - sb)^T (P + mu p p^T) (sigma - sb)],  sb = sigma_bar.
inline double eval_Hcal(double s, const Vec& x, const Vec& u, const AdjointState& adj,
                        const GeneralProblem& problem) {
    adj.require_sigma_bar();
    const Mat w = detail::weight_matrix(adj, problem.mu);
    const Mat sg = problem.sigma(s, x, u);
    double h = eval_H(s, x, u, adj, problem);
    for (std::size_t j = 0; j < problem.d; ++j) {
        const Vec sbj = adj.sigma_bar.col(j);
        h -= 0.5 * quad_form(w, sbj);
        Vec dj = sg.col(j);
        for (std::size_t i = 0; i < problem.n; ++i) dj[i] -= sbj[i];
        h += 0.5 * quad_form(w, dj);
    }
    return h;
}

// Left-hand side of the variational inequality: equals Hcal(u) - Hcal(u_bar)
// when sigma_bar = sigma(s, x_bar, u_bar).
inline double variational_lhs(double s, const Vec& x, const Vec& u, const Vec& u_bar,
                              const AdjointState& adj, const GeneralProblem& problem) {
    const Mat w = detail::weight_matrix(adj, problem.mu);
    double lhs = eval_H(s, x, u, adj, problem) - eval_H(s, x, u_bar, adj, problem);
    const Mat sg = problem.sigma(s, x, u);
    for (std::size_t j = 0; j < problem.d; ++j) {
        Vec dj = sg.col(j);
        const Vec sbj = adj.sigma_bar.col(j);
        for (std::size_t i = 0; i < problem.n; ++i) dj[i] -= sbj[i];
        lhs += 0.5 * quad_form(w, dj);
    }
    return lhs;
}

struct MinimizeResult {
    double u_star = 0.0;
    double value = 0.0;
};

namespace detail {

// 1-d grid scan (ascending, strict improvement keeps the smallest tie),
// golden-section narrowing, then symmetric parabolic interpolation. The
// parabolic finish recovers quadratic vertices to machine precision, which
// pure value comparison cannot once the objective flattens below rounding.
template <typename F>
MinimizeResult minimize_scalar(const F& fn, double lo, double hi, std::size_t grid_points) {
    if (grid_points < 2) grid_points = 2;
    const double step = (hi - lo) / static_cast<double>(grid_points - 1);
    double best_u = lo;
    double best_v = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid_points; ++i) {
        const double u = (i + 1 == grid_points) ? hi : lo + static_cast<double>(i) * step;
        const double v = fn(u);
        if (!std::isfinite(v))
            throw std::runtime_error("minimize: non-finite objective at u=" + std::to_string(u));
        if (v < best_v) {
            best_v = v;
            best_u = u;
        }
    }
    double a = std::max(lo, best_u - step);
    double b = std::min(hi, best_u + step);
    const double inv_phi = 0.6180339887498949;
    const double width_target = 1e-5 * (hi - lo);
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = fn(x1), f2 = fn(x2);
    for (int it = 0; it < 60 && (b - a) > width_target; ++it) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = fn(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = fn(x2);
        }
    }
    MinimizeResult r{0.5 * (a + b), fn(0.5 * (a + b))};
    if (f1 < r.value) r = {x1, f1};
    if (f2 < r.value) r = {x2, f2};
    if (best_v < r.value) r = {best_u, best_v};
    // two parabolic steps, skipped near the box edge; the stencil stays wide
    // because value noise scales like eps/h while the quadratic fit is exact
    for (double h : {0.5 * (b - a), 1e-4 * std::max(1.0, std::abs(r.u_star))}) {
        if (h <= 0.0 || r.u_star - h < lo || r.u_star + h > hi) continue;
        const double fl = fn(r.u_star - h);
        const double fr = fn(r.u_star + h);
        const double denom = fr - 2.0 * r.value + fl;
        if (!(denom > 0.0)) continue;
        double cand = r.u_star - 0.5 * h * (fr - fl) / denom;
        cand = std::min(hi, std::max(lo, cand));
        const double fc = fn(cand);
        if (fc <= r.value) r = {cand, fc};
        else if (std::abs(cand - r.u_star) <= h) r.u_star = cand; // flat to rounding: trust the fit
    }
    return r;
}

} // namespace detail

// inf_u G over the control box: exhaustive scan (default 1001 points)
// followed by golden-section refinement. Scalar controls.
inline MinimizeResult minimize_G(double t, const Vec& x, const Vec& p, const Mat& P,
                                 const GeneralProblem& problem, std::size_t grid_points = 1001) {
    if (problem.m != 1)
        throw std::invalid_argument("minimize_G: scalar control dimension only");
    const ControlBox box = problem.control_box[0];
    auto fn = [&](double u) { return eval_G(t, x, Vec{u}, p, P, problem); };
    return detail::minimize_scalar(fn, box.lo, box.hi, grid_points);
}

using ValueMap = std::function<double(double, const Vec&)>;
using GradMap = std::function<Vec(double, const Vec&)>;
using HessMap = std::function<Mat(double, const Vec&)>;

// Signed residual of the HJB equation, V_t + inf_u G(t, x, u, V_x, V_xx).
inline double hjb_residual(const ValueMap& V_t, const GradMap& V_x, const HessMap& V_xx, double t,
                           const Vec& x, const GeneralProblem& problem,
                           std::size_t grid_points = 1001) {
    return V_t(t, x) + minimize_G(t, x, V_x(t, x), V_xx(t, x), problem, grid_points).value;
}

// Central-difference helpers for value functions without closed-form
// derivatives; steps follow the usual truncation/rounding balance and are
// validated against closed forms in the tests.
inline ValueMap fd_time_derivative(std::function<double(double, const Vec&)> V,
                                   double h = 1e-6) {
    return [V = std::move(V), h](double t, const Vec& x) {
        return (V(t + h, x) - V(t - h, x)) / (2.0 * h);
    };
}

inline GradMap fd_gradient(std::function<double(double, const Vec&)> V) {
    return [V = std::move(V)](double t, const Vec& x) {
        Vec g(x.size());
        Vec xp = x, xm = x;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double h = 1e-5 * std::max(1.0, std::abs(x[i]));
            xp[i] = x[i] + h;
            xm[i] = x[i] - h;
            g[i] = (V(t, xp) - V(t, xm)) / (2.0 * h);
            xp[i] = x[i];
            xm[i] = x[i];
        }
        return g;
    };
}

inline HessMap fd_hessian(std::function<double(double, const Vec&)> V) {
    return [V = std::move(V)](double t, const Vec& x) {
        const std::size_t n = x.size();
        Mat h(n, n);
        Vec y = x;
        const double v0 = V(t, x);
        for (std::size_t i = 0; i < n; ++i) {
            const double hi = std::sqrt(1e-5 * std::max(1.0, std::abs(x[i])));
            y[i] = x[i] + hi;
            const double vp = V(t, y);
            y[i] = x[i] - hi;
            const double vm = V(t, y);
            y[i] = x[i];
            h(i, i) = (vp - 2.0 * v0 + vm) / (hi * hi);
            for (std::size_t j = i + 1; j < n; ++j) {
                const double hj = std::sqrt(1e-5 * std::max(1.0, std::abs(x[j])));
                y[i] = x[i] + hi; y[j] = x[j] + hj;
                const double vpp = V(t, y);
                y[j] = x[j] - hj;
                const double vpm = V(t, y);
                y[i] = x[i] - hi; y[j] = x[j] + hj;
                const double vmp = V(t, y);
                y[j] = x[j] - hj;
                const double vmm = V(t, y);
                y[i] = x[i]; y[j] = x[j];
                h(i, j) = h(j, i) = (vpp - vpm - vmp + vmm) / (4.0 * hi * hj);
            }
        }
        return h;
    };
}

struct MinimumConditionReport {
    bool pass = false;
    double hcal_candidate = 0.0;      // Hcal at the supplied u_bar
    double worst_violation = 0.0;     // max over grid of Hcal(u_bar) - Hcal(u)
    double worst_u = 0.0;
    double variational_min = 0.0;     // min over grid of the inequality LHS
    double variational_worst_u = 0.0;
};

// Pointwise minimum condition: Hcal(s, x_bar, u_bar) <= Hcal(s, x_bar, u) + tol
// for every sampled u, along with the equivalent variational inequality.
inline MinimumConditionReport check_minimum_condition(double s, const Vec& x_bar, const Vec& u_bar,
                                                      const AdjointState& adj,
                                                      const GeneralProblem& problem,
                                                      std::size_t grid_points = 1001,
                                                      double tol = 1e-8) {
    if (problem.m != 1)
        throw std::invalid_argument("check_minimum_condition: scalar control dimension only");
    const ControlBox box = problem.control_box[0];
    MinimumConditionReport rep;
    rep.hcal_candidate = eval_Hcal(s, x_bar, u_bar, adj, problem);
    rep.worst_violation = -std::numeric_limits<double>::infinity();
    rep.variational_min = std::numeric_limits<double>::infinity();
    const double step = (box.hi - box.lo) / static_cast<double>(grid_points - 1);
    for (std::size_t i = 0; i < grid_points; ++i) {
        const double u = (i + 1 == grid_points) ? box.hi : box.lo + static_cast<double>(i) * step;
        const double viol = rep.hcal_candidate - eval_Hcal(s, x_bar, Vec{u}, adj, problem);
        if (viol > rep.worst_violation) {
            rep.worst_violation = viol;
            rep.worst_u = u;
        }
        const double lhs = variational_lhs(s, x_bar, Vec{u}, u_bar, adj, problem);
        if (lhs < rep.variational_min) {
            rep.variational_min = lhs;
            rep.variational_worst_u = u;
        }
    }
    rep.pass = rep.worst_violation <= tol && rep.variational_min >= -tol;
    return rep;
}

} // namespace rsoc

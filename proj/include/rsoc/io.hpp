#pragma once

#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rsoc/portfolio.hpp"

namespace rsoc {

// Fixed 17-significant-digit decimal formatting; output bytes depend only on
// the value, never on locale or clock.
inline std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// Short form for labels and keys (values keep their full precision).
inline std::string fmt_label(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline double parse_double(const std::string& key, const std::string& s) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "': cannot parse '" + s + "' as a number");
    }
    if (trim(s.substr(pos)) != "")
        throw ConfigError("config: key '" + key + "': trailing characters in '" + s + "'");
    return v;
}

inline std::vector<double> parse_list(const std::string& key, const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
    if (out.empty()) throw ConfigError("config: key '" + key + "': empty list");
    return out;
}

inline std::size_t parse_size(const std::string& key, const std::string& s) {
    const double v = parse_double(key, s);
    if (v < 0.0 || v != std::floor(v))
        throw ConfigError("config: key '" + key + "': expected a nonnegative integer");
    return static_cast<std::size_t>(v);
}

} // namespace detail

// Flat key = value configuration mirroring ExperimentConfig and
// PortfolioParams field names. Unknown keys are errors; '#' starts a comment.
inline ExperimentConfig parse_config_text(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::stringstream ss(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        if (kv.count(key))
            throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        kv[key] = val;
    }

    ExperimentConfig cfg;
    auto take = [&kv](const std::string& key) -> std::string* {
        auto it = kv.find(key);
        return it == kv.end() ? nullptr : &it->second;
    };
    auto num = [&](const std::string& key, double& target) {
        if (auto* s = take(key)) {
            target = detail::parse_double(key, *s);
            kv.erase(key);
        }
    };
    auto size = [&](const std::string& key, std::size_t& target) {
        if (auto* s = take(key)) {
            target = detail::parse_size(key, *s);
            kv.erase(key);
        }
    };
    auto list = [&](const std::string& key, std::vector<double>& target) {
        if (auto* s = take(key)) {
            target = detail::parse_list(key, *s);
            kv.erase(key);
        }
    };

    double r_const = cfg.params.r.is_constant() ? cfg.params.r.constant_value() : 0.02;
    num("r", r_const);
    cfg.params.r = Rate(r_const);
    num("a", cfg.params.a);
    num("A", cfg.params.A);
    num("b", cfg.params.b);
    num("B", cfg.params.B);
    num("theta", cfg.params.theta);
    num("v", cfg.params.v);
    num("T", cfg.params.T);
    if (auto* s = take("sigma")) {
        const auto vals = detail::parse_list("sigma", *s);
        if (vals.size() != 2) throw ConfigError("config: sigma needs two components");
        cfg.params.sigma = {vals[0], vals[1]};
        kv.erase("sigma");
    }
    if (auto* s = take("lambda")) {
        const auto vals = detail::parse_list("lambda", *s);
        if (vals.size() != 2) throw ConfigError("config: lambda needs two components");
        cfg.params.lambda = {vals[0], vals[1]};
        kv.erase("lambda");
    }

    size("n_steps", cfg.n_steps);
    size("ode_refinement", cfg.ode_refinement);
    size("n_paths", cfg.n_paths);
    size("block_size", cfg.block_size);
    if (auto* s = take("seed")) {
        cfg.seed = static_cast<std::uint64_t>(detail::parse_size("seed", *s));
        kv.erase("seed");
    }
    num("x0", cfg.x0);
    list("perturbations", cfg.perturbations);
    if (auto* s = take("state_box")) {
        const auto vals = detail::parse_list("state_box", *s);
        if (vals.size() != 2) throw ConfigError("config: state_box needs two endpoints");
        cfg.state_lo = vals[0];
        cfg.state_hi = vals[1];
        kv.erase("state_box");
    }
    num("const_policy", cfg.const_policy);
    size("n_check_paths", cfg.n_check_paths);
    size("n_mincond_points", cfg.n_mincond_points);
    size("n_hjb_path_points", cfg.n_hjb_path_points);
    size("bsde_paths", cfg.bsde_paths);
    if (auto* s = take("bsde_steps")) {
        const auto vals = detail::parse_list("bsde_steps", *s);
        cfg.bsde_steps.clear();
        for (double v : vals) {
            if (v < 1.0 || v != std::floor(v))
                throw ConfigError("config: bsde_steps entries must be positive integers");
            cfg.bsde_steps.push_back(static_cast<std::size_t>(v));
        }
        kv.erase("bsde_steps");
    }
    list("theta_sweep", cfg.theta_sweep);
    size("scan_nt", cfg.scan_nt);
    size("scan_nx", cfg.scan_nx);
    num("tol_feedback_eq", cfg.tol.feedback_eq);
    num("tol_hjb_lattice", cfg.tol.hjb_lattice);
    num("tol_hjb_path", cfg.tol.hjb_path);
    num("tol_adjoint_identity", cfg.tol.adjoint_identity);
    num("tol_comparison", cfg.tol.comparison);
    num("tol_strict_gap", cfg.tol.strict_gap);
    num("tol_min_condition", cfg.tol.min_condition);

    if (!kv.empty()) throw ConfigError("config: unknown key '" + kv.begin()->first + "'");
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

// ---------------------------------------------------------------------------
// deterministic artifact writers

inline void write_coeffs_csv(const CoefficientSet& coeffs, std::ostream& os) {
    os << "t,gamma,phi,k,rho\n";
    for (std::size_t j = 0; j < coeffs.grid.n_nodes(); ++j)
        os << fmt(coeffs.grid.node(j)) << ',' << fmt(coeffs.gamma[j]) << ',' << fmt(coeffs.phi[j])
           << ',' << fmt(coeffs.k[j]) << ',' << fmt(coeffs.rho[j]) << '\n';
}

inline void write_optimality_csv(const std::vector<OptimalityRow>& rows, std::ostream& os) {
    os << "epsilon,J,std_error\n";
    for (const auto& r : rows)
        os << fmt(r.epsilon) << ',' << fmt(r.cost) << ',' << fmt(r.std_error) << '\n';
}

inline void write_relations_txt(const RelationReport& rep, std::ostream& os) {
    for (const auto& c : rep.checks)
        os << (c.pass ? "PASS" : "FAIL") << ' ' << c.name << " worst=" << fmt(c.worst)
           << " tol=" << fmt(c.tol) << " at " << c.location << '\n';
    os << (rep.all_pass() ? "ALL PASS\n" : "FAILURES PRESENT\n");
}

inline void write_estimates_csv(const ExperimentReport& rep, const ExperimentConfig& cfg,
                                std::ostream& os) {
    os << "label,mu,n_paths,value,std_error\n";
    const double theta = cfg.params.theta;
    const std::size_t n = cfg.n_paths;
    auto row = [&os, n](const std::string& label, double mu, double value, double se) {
        os << label << ',' << fmt(mu) << ',' << n << ',' << fmt(value) << ',' << fmt(se) << '\n';
    };
    for (const auto& r : rep.optimality)
        row("cost_eps_" + fmt(r.epsilon), theta, r.cost, r.std_error);
    row("cost_zero_policy", theta, rep.zero_policy_cost, rep.zero_policy_se);
    row("growth_original_optimal", -theta, rep.transform_optimal.growth_original,
        rep.transform_optimal.se_original);
    row("growth_transformed_optimal", theta, rep.transform_optimal.growth_transformed,
        rep.transform_optimal.se_transformed);
    row("growth_original_constant", -theta, rep.transform_constant.growth_original,
        rep.transform_constant.se_original);
    row("growth_transformed_constant", theta, rep.transform_constant.growth_transformed,
        rep.transform_constant.se_transformed);
    for (const auto& s : rep.theta_sweep)
        row("cost_theta_" + fmt(s.theta), s.theta, s.cost, s.std_error);
}

inline void write_report_txt(const ExperimentReport& rep, const ExperimentConfig& cfg,
                             std::ostream& os) {
    auto line = [&os](const std::string& key, const std::string& value) {
        os << key << " = " << value << '\n';
    };
    line("n_paths", std::to_string(cfg.n_paths));
    line("n_steps", std::to_string(cfg.n_steps));
    line("ode_refinement", std::to_string(cfg.ode_refinement));
    line("seed", std::to_string(cfg.seed));
    line("theta", fmt(cfg.params.theta));
    line("x0", fmt(cfg.x0));
    line("value_at_origin", fmt(rep.value_at_origin));
    for (const auto& r : rep.optimality) {
        const std::string tag = "eps_" + fmt(r.epsilon);
        line("J_" + tag, fmt(r.cost));
        line("se_" + tag, fmt(r.std_error));
        if (r.epsilon != 0.0) {
            line("gap_" + tag, fmt(r.gap));
            line("gap_se_" + tag, fmt(r.gap_se));
            line("gap_pass_" + tag, r.pass ? "1" : "0");
        }
    }
    line("J_zero_policy", fmt(rep.zero_policy_cost));
    line("zero_policy_pass", rep.zero_policy_pass ? "1" : "0");
    line("transform_delta_optimal", fmt(rep.transform_optimal.delta));
    line("transform_se_optimal", fmt(rep.transform_optimal.combined_se));
    line("transform_pass_optimal", rep.transform_optimal.pass ? "1" : "0");
    line("transform_delta_constant", fmt(rep.transform_constant.delta));
    line("transform_se_constant", fmt(rep.transform_constant.combined_se));
    line("transform_pass_constant", rep.transform_constant.pass ? "1" : "0");
    for (const auto& s : rep.theta_sweep) line("J_theta_" + fmt(s.theta), fmt(s.cost));
    line("relations_pass", rep.relations.all_pass() ? "1" : "0");
    line("all_pass", rep.all_pass() ? "1" : "0");
}

inline void write_hjb_scan_csv(const std::vector<HjbScanPoint>& points, std::ostream& os) {
    os << "t,x,residual,u_star\n";
    for (const auto& p : points)
        os << fmt(p.t) << ',' << fmt(p.x) << ',' << fmt(p.residual) << ',' << fmt(p.u_star) << '\n';
}

} // namespace rsoc

// Command-line driver: solve the coefficient equations, verify the
// maximum-principle / dynamic-programming relations, and run the full
// Monte-Carlo experiment with deterministic artifacts.
//
// Exit codes: 0 all checks pass, 1 verification failure, 2 input error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "rsoc/rsoc.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir = "out";
    std::string fault = "none";
    std::int64_t seed = -1;
    std::int64_t paths = -1;
    std::int64_t steps = -1;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "flat key=value config file");
    cmd->add_option("--out", opts.out_dir, "output directory (created if missing)");
    cmd->add_option("--seed", opts.seed, "override config seed");
    cmd->add_option("--paths", opts.paths, "override config n_paths");
    cmd->add_option("--steps", opts.steps, "override config n_steps");
    cmd->add_option("--fault", opts.fault, "fault injection hook (none | swap-gamma-rho)");
}

rsoc::ExperimentConfig resolve_config(const CommonOpts& opts) {
    rsoc::ExperimentConfig cfg =
        opts.config_path.empty() ? rsoc::ExperimentConfig{} : rsoc::load_config(opts.config_path);
    if (opts.seed >= 0) cfg.seed = static_cast<std::uint64_t>(opts.seed);
    if (opts.paths >= 0) cfg.n_paths = static_cast<std::size_t>(opts.paths);
    if (opts.steps >= 0) cfg.n_steps = static_cast<std::size_t>(opts.steps);
    cfg.validate();
    return cfg;
}

rsoc::Fault resolve_fault(const CommonOpts& opts) {
    const auto f = rsoc::parse_fault(opts.fault);
    if (!f) throw rsoc::ConfigError("unknown --fault '" + opts.fault + "'");
    return *f;
}

std::ofstream open_out(const fs::path& dir, const std::string& name) {
    fs::create_directories(dir);
    std::ofstream os(dir / name, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + (dir / name).string());
    return os;
}

int cmd_coeffs(const CommonOpts& opts) {
    const rsoc::ExperimentConfig cfg = resolve_config(opts);
    const rsoc::CoefficientSet coeffs = rsoc::solve_coefficients(cfg.params, cfg.ode_grid());
    auto os = open_out(opts.out_dir, "coeffs.csv");
    rsoc::write_coeffs_csv(coeffs, os);
    std::cout << "wrote " << (fs::path(opts.out_dir) / "coeffs.csv").string() << " ("
              << coeffs.grid.n_nodes() << " rows)\n";
    return 0;
}

int cmd_verify(const CommonOpts& opts) {
    const rsoc::ExperimentConfig cfg = resolve_config(opts);
    const rsoc::RelationReport rep = rsoc::verify_relations(cfg, resolve_fault(opts));
    auto os = open_out(opts.out_dir, "relations.txt");
    rsoc::write_relations_txt(rep, os);
    rsoc::write_relations_txt(rep, std::cout);
    return rep.all_pass() ? 0 : 1;
}

int cmd_experiment(const CommonOpts& opts, std::size_t dump_paths) {
    const rsoc::ExperimentConfig cfg = resolve_config(opts);
    const rsoc::Fault fault = resolve_fault(opts);
    const rsoc::ExperimentReport rep = rsoc::run_experiment(cfg, fault);

    const fs::path dir(opts.out_dir);
    {
        auto os = open_out(dir, "coeffs.csv");
        rsoc::write_coeffs_csv(rep.coeffs, os);
    }
    {
        auto os = open_out(dir, "optimality.csv");
        rsoc::write_optimality_csv(rep.optimality, os);
    }
    {
        auto os = open_out(dir, "relations.txt");
        rsoc::write_relations_txt(rep.relations, os);
    }
    {
        auto os = open_out(dir, "estimates.csv");
        rsoc::write_estimates_csv(rep, cfg, os);
    }
    {
        auto os = open_out(dir, "report.txt");
        rsoc::write_report_txt(rep, cfg, os);
    }
    if (dump_paths > 0) {
        const rsoc::CoefficientSet coeffs = rep.coeffs;
        const rsoc::ScalarPolicy policy = rsoc::make_optimal_policy(coeffs, cfg.params, 0.0, fault);
        auto noise = rsoc::generate_noise(cfg.sde_grid(), dump_paths, 2, cfg.seed,
                                          rsoc::blockspace::verify + 64);
        const rsoc::SamplePaths paths =
            rsoc::simulate_factor_transformed(cfg.params, policy, cfg.x0, noise);
        auto os = open_out(dir, "paths.csv");
        rsoc::write_paths_csv(paths, os);
    }

    // timing goes to the console only; emitted files stay byte-deterministic
    std::cout << "coefficients " << rep.seconds_coeffs << " s, relations " << rep.seconds_relations
              << " s, optimality " << rep.seconds_optimality << " s, transform "
              << rep.seconds_transform << " s, total " << rep.seconds_total << " s\n";
    std::cout << "V(0,x0) = " << rsoc::fmt(rep.value_at_origin)
              << ", J(optimal) = " << rsoc::fmt(rep.optimality.empty() ? 0.0 : [&] {
                     for (const auto& r : rep.optimality)
                         if (r.epsilon == 0.0) return r.cost;
                     return 0.0;
                 }())
              << '\n';
    std::cout << (rep.all_pass() ? "ALL PASS\n" : "FAILURES PRESENT\n");
    return rep.all_pass() ? 0 : 1;
}

int cmd_hjb_scan(const CommonOpts& opts) {
    const rsoc::ExperimentConfig cfg = resolve_config(opts);
    const auto points = rsoc::hjb_scan(cfg, cfg.scan_nt, cfg.scan_nx);
    auto os = open_out(opts.out_dir, "hjb_scan.csv");
    rsoc::write_hjb_scan_csv(points, os);
    double worst = 0.0;
    for (const auto& p : points) worst = std::max(worst, std::abs(p.residual));
    std::cout << "wrote hjb_scan.csv, " << points.size() << " points, max |residual| = "
              << rsoc::fmt(worst) << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"risk-sensitive stochastic control toolkit"};
    app.require_subcommand(1);

    CommonOpts coeffs_opts, verify_opts, exp_opts, scan_opts;
    std::size_t dump_paths = 0;

    add_common(app.add_subcommand("coeffs", "solve the coefficient equations, write coeffs.csv"),
               coeffs_opts);
    add_common(app.add_subcommand("verify", "verify the MP/DPP relations, write relations.txt"),
               verify_opts);
    auto* exp_cmd =
        app.add_subcommand("experiment", "full Monte-Carlo experiment with all artifacts");
    add_common(exp_cmd, exp_opts);
    exp_cmd->add_option("--dump-paths", dump_paths, "also dump this many simulated paths");
    add_common(app.add_subcommand("hjb-scan", "HJB residual scan over a (t,x) lattice"), scan_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand("coeffs")) return cmd_coeffs(coeffs_opts);
        if (app.got_subcommand("verify")) return cmd_verify(verify_opts);
        if (app.got_subcommand("experiment")) return cmd_experiment(exp_opts, dump_paths);
        if (app.got_subcommand("hjb-scan")) return cmd_hjb_scan(scan_opts);
    } catch (const rsoc::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

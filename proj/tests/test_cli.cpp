#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "rsoc_cli_test";

int run_cli(const std::string& args) {
    const std::string cmd = std::string(RSOC_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -2;
}

void write_file(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream os(p);
    os << text;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t count_lines(const std::string& text) {
    std::size_t n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

const char* kSmallConfig =
    "# baseline market, reduced sizes for fast runs\n"
    "theta = 1.0\n"
    "r = 0.02\n"
    "a = 0.08\n"
    "A = 0.2\n"
    "b = 0.1\n"
    "B = -0.5\n"
    "sigma = 0.3, 0.0\n"
    "lambda = 0.1, 0.2\n"
    "v = 1.0\n"
    "T = 1.0\n"
    "x0 = 1.0\n"
    "n_steps = 64\n"
    "n_paths = 6000\n"
    "block_size = 512\n"
    "seed = 42\n"
    "n_check_paths = 30\n"
    "n_hjb_path_points = 100\n"
    "n_mincond_points = 50\n"
    "bsde_paths = 400\n"
    "perturbations = -0.2, 0.2\n";

} // namespace

TEST_CASE("coeffs subcommand writes one row per coefficient node") {
    fs::remove_all(kRoot);
    const fs::path cfg = kRoot / "small.cfg";
    write_file(cfg, kSmallConfig);
    const fs::path out = kRoot / "coeffs_out";
    REQUIRE(run_cli("coeffs --config " + cfg.string() + " --out " + out.string()) == 0);
    const std::string csv = read_file(out / "coeffs.csv");
    CHECK(csv.rfind("t,gamma,phi,k,rho\n", 0) == 0);
    CHECK(count_lines(csv) == 1 + 64 * 10 + 1); // header + nodes
}

TEST_CASE("coeffs: --steps override changes the row count") {
    const fs::path cfg = kRoot / "small.cfg";
    write_file(cfg, kSmallConfig);
    const fs::path out = kRoot / "coeffs_out32";
    REQUIRE(run_cli("coeffs --config " + cfg.string() + " --steps 32 --out " + out.string()) == 0);
    CHECK(count_lines(read_file(out / "coeffs.csv")) == 1 + 32 * 10 + 1);
}

TEST_CASE("coeffs: A = 0 zeroes the gamma column") {
    const fs::path cfg = kRoot / "a0.cfg";
    write_file(cfg, std::string(kSmallConfig) + "A = 0.0\n");
    // duplicate key is an error: A already present
    REQUIRE(run_cli("coeffs --config " + cfg.string() + " --out " + (kRoot / "x").string()) == 2);

    std::string text(kSmallConfig);
    const auto pos = text.find("A = 0.2");
    text.replace(pos, 7, "A = 0.0");
    write_file(cfg, text);
    const fs::path out = kRoot / "a0_out";
    REQUIRE(run_cli("coeffs --config " + cfg.string() + " --out " + out.string()) == 0);
    std::istringstream in(read_file(out / "coeffs.csv"));
    std::string line;
    std::getline(in, line); // header
    while (std::getline(in, line)) {
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        CHECK(line.substr(c1 + 1, c2 - c1 - 1) == "0");
    }
}

TEST_CASE("malformed and unknown keys exit with code 2") {
    const fs::path bad = kRoot / "bad.cfg";
    write_file(bad, "thetaa = 1\n");
    CHECK(run_cli("coeffs --config " + bad.string() + " --out " + (kRoot / "y").string()) == 2);
    write_file(bad, "theta 1\n");
    CHECK(run_cli("coeffs --config " + bad.string() + " --out " + (kRoot / "y").string()) == 2);
    write_file(bad, "theta = abc\n");
    CHECK(run_cli("verify --config " + bad.string() + " --out " + (kRoot / "y").string()) == 2);
    CHECK(run_cli("coeffs --config " + (kRoot / "missing.cfg").string()) == 2);
}

TEST_CASE("verify passes on the baseline and fails under fault injection") {
    const fs::path cfg = kRoot / "small.cfg";
    write_file(cfg, kSmallConfig);
    const fs::path out = kRoot / "verify_out";
    REQUIRE(run_cli("verify --config " + cfg.string() + " --out " + out.string()) == 0);
    const std::string rel = read_file(out / "relations.txt");
    CHECK(rel.find("ALL PASS") != std::string::npos);
    CHECK(rel.find("FAIL ") == std::string::npos);

    REQUIRE(run_cli("verify --config " + cfg.string() + " --fault swap-gamma-rho --out " +
                    (kRoot / "verify_fault").string()) == 1);
    const std::string relf = read_file(kRoot / "verify_fault" / "relations.txt");
    CHECK(relf.find("FAIL") != std::string::npos);

    CHECK(run_cli("verify --config " + cfg.string() + " --fault bogus --out " +
                  (kRoot / "verify_bogus").string()) == 2);
}

TEST_CASE("experiment emits deterministic artifacts") {
    const fs::path cfg = kRoot / "small.cfg";
    write_file(cfg, kSmallConfig);
    const fs::path out1 = kRoot / "exp1" / "nested" / "dir";
    const fs::path out2 = kRoot / "exp2";
    REQUIRE(run_cli("experiment --config " + cfg.string() + " --out " + out1.string()) == 0);
    REQUIRE(run_cli("experiment --config " + cfg.string() + " --out " + out2.string()) == 0);
    for (const char* name :
         {"coeffs.csv", "optimality.csv", "relations.txt", "estimates.csv", "report.txt"}) {
        INFO(name);
        REQUIRE(fs::exists(out1 / name));
        REQUIRE(read_file(out1 / name) == read_file(out2 / name));
    }
    const std::string report = read_file(out1 / "report.txt");
    CHECK(report.find("all_pass = 1") != std::string::npos);

    // different seed changes the Monte-Carlo artifacts
    const fs::path out3 = kRoot / "exp3";
    REQUIRE(run_cli("experiment --config " + cfg.string() + " --seed 7 --out " + out3.string()) ==
            0);
    CHECK(read_file(out3 / "optimality.csv") != read_file(out2 / "optimality.csv"));
    CHECK(read_file(out3 / "coeffs.csv") == read_file(out2 / "coeffs.csv"));
}

TEST_CASE("experiment can dump simulated paths") {
    const fs::path cfg = kRoot / "small.cfg";
    write_file(cfg, kSmallConfig);
    const fs::path out = kRoot / "exp_dump";
    REQUIRE(run_cli("experiment --config " + cfg.string() + " --dump-paths 3 --out " +
                    out.string()) == 0);
    const std::string paths = read_file(out / "paths.csv");
    CHECK(paths.rfind("path,t,x,u\n", 0) == 0);
    CHECK(count_lines(paths) == 1 + 3 * 65);
}

TEST_CASE("hjb-scan writes the lattice with controls") {
    const fs::path cfg = kRoot / "small.cfg";
    write_file(cfg, kSmallConfig);
    const fs::path out = kRoot / "scan_out";
    REQUIRE(run_cli("hjb-scan --config " + cfg.string() + " --out " + out.string()) == 0);
    const std::string csv = read_file(out / "hjb_scan.csv");
    CHECK(csv.rfind("t,x,residual,u_star\n", 0) == 0);
    CHECK(count_lines(csv) == 1 + 20 * 20);
}

TEST_CASE("defaults work without a config file") {
    // quick run: overrides shrink the default experiment
    const fs::path out = kRoot / "default_out";
    REQUIRE(run_cli("coeffs --steps 16 --out " + out.string()) == 0);
    CHECK(count_lines(read_file(out / "coeffs.csv")) == 1 + 161);
}

TEST_CASE("quick mode finishes in seconds") {
    const fs::path cfg = kRoot / "small.cfg";
    write_file(cfg, kSmallConfig);
    const auto t0 = std::chrono::steady_clock::now();
    const int rc = run_cli("experiment --config " + cfg.string() + " --paths 1000 --out " +
                           (kRoot / "quick").string());
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    // 1e3 paths cannot resolve the smallest gaps, so a gate FAIL (exit 1) is
    // acceptable here; the contract under test is the runtime
    CHECK((rc == 0 || rc == 1));
    CHECK(secs < 5.0);
    CHECK(fs::exists(kRoot / "quick" / "report.txt"));
}

TEST_CASE("unknown subcommand or missing subcommand exits with 2") {
    CHECK(run_cli("frobnicate") == 2);
    CHECK(run_cli("") == 2);
}

// Command-line front end: `solve` runs the full pipeline and writes the
// profile CSV and summary JSON, `check` runs the invariant suite, and
// `psi-scan` tabulates the reduced energy over radii ranges.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "choquard/pipeline.hpp"

namespace {

using choquard::SolverConfig;

/// Applies a JSON config file; flags given on the command line win.
void load_config_file(const std::string& path, SolverConfig& config) {
    std::ifstream in(path);
    if (!in) throw choquard::SolverError(choquard::Errc::ConfigError,
                                         "cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw choquard::SolverError(choquard::Errc::ConfigError, e.what());
    }
    for (const auto& [key, value] : j.items()) {
        if (key == "p") config.p = value.get<double>();
        else if (key == "k") config.k = value.get<int>();
        else if (key == "points_per_annulus") config.points_per_annulus = value.get<int>();
        else if (key == "r_infty") config.r_infty = value.get<double>();
        else if (key == "kappa") config.kappa = value.get<double>();
        else if (key == "tol_nehari") config.tol_nehari = value.get<double>();
        else if (key == "tol_grad") config.tol_grad = value.get<double>();
        else if (key == "tol_r") config.tol_r = value.get<double>();
        else if (key == "tol_psi") config.tol_psi = value.get<double>();
        else if (key == "jump_threshold") config.jump_threshold = value.get<double>();
        else if (key == "max_inner_iters") config.max_inner_iters = value.get<int>();
        else if (key == "max_outer_evals") config.max_outer_evals = value.get<int>();
        else if (key == "seed") config.seed = value.get<unsigned long>();
        else
            throw choquard::SolverError(choquard::Errc::ConfigError,
                                        "unknown config key '" + key + "'");
    }
}

choquard::ScanRange parse_range(const std::string& text) {
    choquard::ScanRange r;
    if (std::sscanf(text.c_str(), "%lf:%lf:%d", &r.lo, &r.hi, &r.n) != 3 || r.n < 1)
        throw choquard::SolverError(choquard::Errc::ConfigError,
                                    "range must be lo:hi:n, got '" + text + "'");
    return r;
}

void add_config_flags(CLI::App* cmd, SolverConfig& config, std::string& config_path) {
    cmd->add_option("--config", config_path, "JSON config file; flags override its fields");
    cmd->add_option("--p", config.p, "nonlinearity exponent in (5/2, 5)");
    cmd->add_option("--k", config.k, "number of sign changes");
    cmd->add_option("--grid", config.points_per_annulus, "grid intervals per annulus");
    cmd->add_option("--r-infty", config.r_infty, "truncation radius");
    cmd->add_option("--kappa", config.kappa, "Coulomb kernel normalization");
    cmd->add_option("--tol-nehari", config.tol_nehari, "scaling-system residual tolerance");
    cmd->add_option("--tol-grad", config.tol_grad, "projected-gradient tolerance");
    cmd->add_option("--tol-r", config.tol_r, "outer simplex diameter tolerance");
    cmd->add_option("--tol-psi", config.tol_psi, "outer psi spread tolerance");
    cmd->add_option("--jump-threshold", config.jump_threshold, "relative interface jump bound");
    cmd->add_option("--max-inner-iters", config.max_inner_iters, "inner iteration budget");
    cmd->add_option("--max-outer-evals", config.max_outer_evals, "psi evaluations per start");
    cmd->add_option("--seed", config.seed, "multi-start jitter seed");
}

/// Re-applies explicitly passed flags on top of a config file.
void apply_flag_overrides(CLI::App* cmd, const SolverConfig& flags, SolverConfig& config) {
    if (cmd->count("--p")) config.p = flags.p;
    if (cmd->count("--k")) config.k = flags.k;
    if (cmd->count("--grid")) config.points_per_annulus = flags.points_per_annulus;
    if (cmd->count("--r-infty")) config.r_infty = flags.r_infty;
    if (cmd->count("--kappa")) config.kappa = flags.kappa;
    if (cmd->count("--tol-nehari")) config.tol_nehari = flags.tol_nehari;
    if (cmd->count("--tol-grad")) config.tol_grad = flags.tol_grad;
    if (cmd->count("--tol-r")) config.tol_r = flags.tol_r;
    if (cmd->count("--tol-psi")) config.tol_psi = flags.tol_psi;
    if (cmd->count("--jump-threshold")) config.jump_threshold = flags.jump_threshold;
    if (cmd->count("--max-inner-iters")) config.max_inner_iters = flags.max_inner_iters;
    if (cmd->count("--max-outer-evals")) config.max_outer_evals = flags.max_outer_evals;
    if (cmd->count("--seed")) config.seed = flags.seed;
}

SolverConfig resolve_config(CLI::App* cmd, const SolverConfig& flags,
                            const std::string& config_path) {
    SolverConfig config = flags;
    if (!config_path.empty()) {
        SolverConfig from_file; // defaults, then file, then explicit flags
        load_config_file(config_path, from_file);
        config = from_file;
        apply_flag_overrides(cmd, flags, config);
    }
    return config;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Radially symmetric k-node solutions of the nonlinear Choquard equation"};
    app.require_subcommand(1);

    SolverConfig flags;
    std::string config_path;
    std::string profile_out = "profile.csv";
    std::string summary_out = "summary.json";
    std::string scan_out;
    std::string scan_r1, scan_r2;

    CLI::App* solve = app.add_subcommand("solve", "solve, optimize the partition, verify");
    add_config_flags(solve, flags, config_path);
    solve->add_option("--profile-out", profile_out, "profile CSV path");
    solve->add_option("--summary-out", summary_out, "summary JSON path");

    CLI::App* check = app.add_subcommand("check", "run the invariant suite");
    add_config_flags(check, flags, config_path);

    CLI::App* scan = app.add_subcommand("psi-scan", "tabulate psi over radii ranges");
    add_config_flags(scan, flags, config_path);
    scan->add_option("--scan-r1", scan_r1, "r1 range lo:hi:n")->required();
    scan->add_option("--scan-r2", scan_r2, "r2 range lo:hi:n (2-D scan)");
    scan->add_option("--out", scan_out, "CSV output path (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve->parsed()) {
            const SolverConfig config = resolve_config(solve, flags, config_path);
            const choquard::SolveSummary s =
                choquard::run_solve(config, profile_out, summary_out);
            if (!s.error.empty())
                std::cerr << "solve failed: " << s.error << "\n";
            std::cout << choquard::summary_json(s);
            return s.exit_code;
        }
        if (check->parsed()) {
            const SolverConfig config = resolve_config(check, flags, config_path);
            choquard::validate_config(config);
            return choquard::run_check(config, std::cout) ? 0 : 1;
        }
        const SolverConfig config = resolve_config(scan, flags, config_path);
        const choquard::ScanRange r1 = parse_range(scan_r1);
        std::optional<choquard::ScanRange> r2;
        if (!scan_r2.empty()) r2 = parse_range(scan_r2);
        if (scan_out.empty()) {
            choquard::run_psi_scan(config, r1, r2, std::cout);
        } else {
            std::ofstream out(scan_out);
            choquard::run_psi_scan(config, r1, r2, out);
        }
        return 0;
    } catch (const choquard::SolverError& e) {
        std::cerr << e.what() << "\n";
        return e.code() == choquard::Errc::ConfigError ? 4 : 3;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 3;
    }
}

#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "choquard/config.hpp"
#include "choquard/errors.hpp"
#include "choquard/outer_search.hpp"
#include "choquard/verifier.hpp"

namespace choquard {

namespace detail {

/// %.17g keeps every double bit-exact through a parse round trip.
inline std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::string json_array(const std::vector<double>& xs) {
    std::string out = "[";
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ", ";
        out += fmt17(xs[i]);
    }
    return out + "]";
}

} // namespace detail

/// Everything run_solve serializes. `error` is empty on success.
struct SolveSummary {
    SolverConfig config;
    std::vector<double> radii;
    std::size_t grid_points = 0;
    double energy = 0.0;
    std::size_t psi_trace_len = 0;
    double constraint_residual = 0.0;
    double gradient_norm = 0.0;
    VerificationReport report;
    double nehari_min_eigenvalue = 0.0;
    bool converged = false;
    int exit_code = 3;
    double wall_time_seconds = 0.0;
    std::string error; // machine-readable Errc name when a stage failed
};

inline std::string summary_json(const SolveSummary& s) {
    using detail::fmt17;
    std::string j = "{\n";
    j += "  \"p\": " + fmt17(s.config.p) + ",\n";
    j += "  \"k\": " + std::to_string(s.config.k) + ",\n";
    j += "  \"radii\": " + detail::json_array(s.radii) + ",\n";
    j += "  \"r_infty\": " + fmt17(s.config.r_infty) + ",\n";
    j += "  \"grid_points\": " + std::to_string(s.grid_points) + ",\n";
    j += "  \"energy\": " + fmt17(s.energy) + ",\n";
    j += "  \"psi_trace_len\": " + std::to_string(s.psi_trace_len) + ",\n";
    j += "  \"constraint_residual\": " + fmt17(s.constraint_residual) + ",\n";
    j += "  \"gradient_norm\": " + fmt17(s.gradient_norm) + ",\n";
    j += "  \"interface_jumps\": " + detail::json_array(s.report.interface_jumps) + ",\n";
    j += "  \"relative_jumps\": " + detail::json_array(s.report.relative_jumps) + ",\n";
    j += "  \"ode_residual\": " + fmt17(s.report.ode_residual) + ",\n";
    j += "  \"sign_changes\": " + std::to_string(s.report.sign_changes) + ",\n";
    j += "  \"strauss_ratio\": " + fmt17(s.report.strauss_ratio) + ",\n";
    j += "  \"nehari_min_eigenvalue\": " + fmt17(s.nehari_min_eigenvalue) + ",\n";
    j += "  \"converged\": " + std::string(s.converged ? "true" : "false") + ",\n";
    j += "  \"exit_code\": " + std::to_string(s.exit_code) + ",\n";
    j += "  \"wall_time_seconds\": " + fmt17(s.wall_time_seconds) + ",\n";
    j += "  \"seed\": " + std::to_string(s.config.seed);
    if (!s.error.empty()) j += ",\n  \"error\": \"" + s.error + "\"";
    j += "\n}\n";
    return j;
}

/// Profile rows: node, glued value, 1-based region (0 at partition radii).
inline void write_profile_csv(std::ostream& os, const SolutionBundle& bundle) {
    const RadialField w = glue(bundle.components);
    const RadialGrid& g = *w.grid;
    os << "t,W,component\n";
    for (std::size_t j = 0; j < g.size(); ++j) {
        const int component = g.is_interface(j) ? 0 : g.annulus_of[j];
        os << detail::fmt17(g.nodes[j]) << ',' << detail::fmt17(w.values[j]) << ','
           << component << '\n';
    }
}

/// Full pipeline: solve (outer search for k >= 1), verify, serialize.
/// Exit code: 0 verified, 2 thresholds unmet, 3 solver failure, 4 bad config.
inline SolveSummary run_solve(const SolverConfig& config, const std::string& profile_path,
                              const std::string& summary_path) {
    SolveSummary s;
    s.config = config;
    const auto t0 = std::chrono::steady_clock::now();
    const auto finish = [&](int code, const char* err) {
        s.exit_code = code;
        s.error = err ? err : "";
        s.wall_time_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!summary_path.empty()) {
            std::ofstream out(summary_path);
            out << summary_json(s);
        }
        return s;
    };

    try {
        validate_config(config);
    } catch (const SolverError& e) {
        return finish(4, errc_name(e.code()));
    }

    try {
        SolutionBundle bundle;
        bool outer_converged = true;
        if (config.k == 0) {
            PsiSolver solver(config);
            const PsiEvaluation& eval = solver.psi(AnnularPartition{});
            bundle = eval.bundle;
            s.psi_trace_len = solver.trace().size();
        } else {
            OuterResult result = optimize_partition(config);
            bundle = std::move(result.best_bundle);
            outer_converged = result.converged;
            s.psi_trace_len = result.trace.size();
        }

        s.radii = bundle.partition.radii;
        s.grid_points = bundle.components.front().grid->size();
        s.energy = bundle.energy;
        s.constraint_residual = bundle.constraint_residual;
        s.gradient_norm = bundle.gradient_norm;
        s.nehari_min_eigenvalue = bundle.nehari.min_eigenvalue_N_tilde;
        s.report = verify(bundle, config);
        s.converged = outer_converged;

        if (!profile_path.empty()) {
            std::ofstream out(profile_path);
            write_profile_csv(out, bundle);
        }
        return finish(s.report.passed ? 0 : 2, nullptr);
    } catch (const SolverError& e) {
        return finish(3, errc_name(e.code()));
    } catch (const std::exception&) {
        return finish(3, "InternalError");
    }
}

// ---------------------------------------------------------------------------
// Invariant suite (the `check` subcommand)

namespace checks {

inline RadialField random_field(const GridPtr& grid, std::mt19937& rng, bool nonnegative) {
    std::uniform_real_distribution<double> u(nonnegative ? 0.0 : -1.0, 1.0);
    RadialField f{grid, std::vector<double>(grid->size())};
    for (auto& v : f.values) v = u(rng);
    f.values.back() = 0.0;
    return f;
}

inline bool cauchy_schwarz(const GridPtr& grid, int pairs, std::mt19937& rng, std::ostream& os) {
    const CoulombKernel kern;
    int bad = 0;
    double worst = 0.0;
    for (int i = 0; i < pairs; ++i) {
        const RadialField f = random_field(grid, rng, true);
        const RadialField g = random_field(grid, rng, true);
        const Potential vf = potential_fast(kern, f);
        const double dfg = coulomb_energy_with(vf, g);
        const double dff = coulomb_energy_with(vf, f);
        const double dgg = coulomb_energy(kern, g, g);
        const double slack = dfg * dfg - dff * dgg * (1.0 + 1e-12);
        if (slack > 0.0) ++bad;
        // equality when g = c f
        std::uniform_real_distribution<double> cdist(0.1, 3.0);
        const double c = cdist(rng);
        RadialField cf{grid, f.values};
        for (auto& v : cf.values) v *= c;
        const double dfcf = coulomb_energy_with(vf, cf);
        const double dcfcf = coulomb_energy(kern, cf, cf);
        worst = std::max(worst, std::abs(dfcf * dfcf - dff * dcfcf) /
                                    std::max(1e-300, dff * dcfcf));
    }
    os << (bad == 0 && worst <= 1e-10 ? "[PASS]" : "[FAIL]")
       << " coulomb-cauchy-schwarz: violations=" << bad << " prop-eq-err=" << worst << "\n";
    return bad == 0 && worst <= 1e-10;
}

inline bool fast_direct(const GridPtr& grid, int fields, double kappa_fast, double kappa_direct,
                        double tol, std::mt19937& rng, std::ostream& os) {
    double worst = 0.0;
    for (int i = 0; i < fields; ++i) {
        const RadialField f = random_field(grid, rng, false);
        const Potential pf = potential_fast(CoulombKernel{kappa_fast}, f);
        const Potential pd = potential_direct(CoulombKernel{kappa_direct}, f);
        const double scale = std::max(max_abs(pf.values), 1e-300);
        for (std::size_t j = 0; j < pf.values.size(); ++j)
            worst = std::max(worst, std::abs(pf.values[j] - pd.values[j]) / scale);
    }
    os << (worst <= tol ? "[PASS]" : "[FAIL]") << " coulomb-fast-vs-direct: max-rel-diff="
       << worst << "\n";
    return worst <= tol;
}

inline bool gradient_fd(const SolverConfig& config, std::mt19937& rng, std::ostream& os) {
    const GridPtr grid = build_grid(make_partition({1.5}), 160, 8.0);
    const CoulombKernel kern = config.kernel();
    std::uniform_real_distribution<double> u(0.4, 1.2);
    double worst = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<ComponentField> comps;
        for (int i = 1; i <= grid->num_annuli(); ++i)
            comps.push_back(make_component(grid, i, [&](double) { return u(rng); }));
        comps = apply_sign_pattern(std::move(comps));
        const std::vector<ComponentField> grads = h_gradient(comps, kern, config.p);

        for (int dir = 0; dir < 10; ++dir) {
            const int i = dir % grid->num_annuli();
            ComponentField v = zero_component(grid, i + 1);
            for (std::size_t j = v.free_begin(); j <= v.free_end(); ++j)
                v.values[j] = u(rng) - 0.8;

            const double eps = 1e-5;
            std::vector<ComponentField> up = comps, dn = comps;
            for (std::size_t j = 0; j < v.values.size(); ++j) {
                up[i].values[j] += eps * v.values[j];
                dn[i].values[j] -= eps * v.values[j];
            }
            const double ep = total_energy(up, kern, config.p).total;
            const double em = total_energy(dn, kern, config.p).total;
            const double fd = (ep - em) / (2.0 * eps);
            const double an = h_inner(grads[i], v);
            worst = std::max(worst, std::abs(fd - an) / std::max(1.0, std::abs(fd)));
        }
    }
    os << (worst <= 1e-5 ? "[PASS]" : "[FAIL]") << " gradient-fd: max-rel-err=" << worst << "\n";
    return worst <= 1e-5;
}

inline bool nehari_certification(std::mt19937& rng, std::ostream& os) {
    bool ok = true;
    double min_eig = 1e300, worst_det = 0.0;
    for (double p : {2.6, 3.0, 4.0, 4.9}) {
        for (int k = 0; k <= 3; ++k) {
            const int n = k + 1;
            std::uniform_real_distribution<double> ua(0.5, 5.0), uc(0.05, 0.6);
            InteractionData data;
            data.a.resize(n);
            data.B.resize(n, n);
            for (int i = 0; i < n; ++i) {
                data.a[i] = ua(rng);
                data.B(i, i) = ua(rng);
            }
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j) {
                    data.B(i, j) = uc(rng) * std::sqrt(data.B(i, i) * data.B(j, j));
                    data.B(j, i) = data.B(i, j);
                }
            try {
                const NehariTuple tuple = project(data, p, 1e-12);
                min_eig = std::min(min_eig, tuple.min_eigenvalue_N_tilde);
                const double det_n = manifold_matrix(data, tuple.t, p).determinant();
                const double det_nt = n_tilde_matrix(data, tuple.t, p).determinant();
                const double sign = (n % 2 == 0) ? 1.0 : -1.0; // (-1)^{k+1}, n = k+1
                worst_det = std::max(worst_det,
                                     std::abs(det_n - sign * det_nt) / std::abs(det_nt));
            } catch (const SolverError&) {
                ok = false;
            }
        }
    }
    ok = ok && min_eig > 0.0 && worst_det <= 1e-8;
    os << (ok ? "[PASS]" : "[FAIL]") << " nehari-certification: min-eig=" << min_eig
       << " det-identity-err=" << worst_det << "\n";
    return ok;
}

} // namespace checks

/// Invariant suite behind `check`: prints one pass/fail line per check.
inline bool run_check(const SolverConfig& config, std::ostream& os) {
    validate_config(config);
    std::mt19937 rng(static_cast<unsigned>(config.seed));
    const GridPtr grid = build_grid(AnnularPartition{}, 800, 10.0);

    bool ok = true;
    ok &= checks::cauchy_schwarz(grid, 200, rng, os);
    ok &= checks::fast_direct(grid, 50, config.kappa, config.kappa, 1e-12, rng, os);
    ok &= checks::gradient_fd(config, rng, os);
    ok &= checks::nehari_certification(rng, os);
    os << (ok ? "[PASS]" : "[FAIL]") << " overall\n";
    return ok;
}

/// psi over a 1-D or 2-D grid of radii; CSV rows r1[,r2],psi. Failed inner
/// solves are reported as nan.
struct ScanRange {
    double lo = 0.0, hi = 0.0;
    int n = 0;
};

inline void run_psi_scan(const SolverConfig& config, const ScanRange& r1,
                         const std::optional<ScanRange>& r2, std::ostream& os) {
    validate_config(config);
    if (config.k != (r2 ? 2 : 1))
        throw SolverError(Errc::ConfigError, "psi-scan needs k matching the ranges given");
    PsiSolver solver(config);

    const auto value_at = [&](std::vector<double> radii) -> double {
        try {
            return solver.psi(make_partition(std::move(radii))).psi;
        } catch (const SolverError&) {
            return std::nan("");
        }
    };
    const auto grid_value = [](const ScanRange& r, int i) {
        return r.n == 1 ? r.lo : r.lo + (r.hi - r.lo) * i / (r.n - 1);
    };

    if (!r2) {
        os << "r1,psi\n";
        for (int i = 0; i < r1.n; ++i) {
            const double x = grid_value(r1, i);
            os << detail::fmt17(x) << ',' << detail::fmt17(value_at({x})) << '\n';
        }
        return;
    }
    os << "r1,r2,psi\n";
    for (int i = 0; i < r1.n; ++i)
        for (int j = 0; j < r2->n; ++j) {
            const double x = grid_value(r1, i), y = grid_value(*r2, j);
            if (y <= x) continue;
            os << detail::fmt17(x) << ',' << detail::fmt17(y) << ','
               << detail::fmt17(value_at({x, y})) << '\n';
        }
}

} // namespace choquard

#pragma once

#include <cmath>
#include <string>

#include "choquard/coulomb.hpp"
#include "choquard/errors.hpp"

namespace choquard {

/// All knobs of the pipeline. Flags and the optional JSON config file map
/// onto these fields one-to-one.
struct SolverConfig {
    double p = 3.0;               // nonlinearity exponent, in (5/2, 5)
    int k = 0;                    // number of sign changes
    int points_per_annulus = 2000;
    double r_infty = 30.0;        // truncation radius (homogeneous Dirichlet)
    double kappa = 1.0;           // Coulomb kernel normalization

    double tol_nehari = 1e-12;    // scaling-system residual, relative to |a|
    double tol_grad = 1e-6;       // H^1 norm of the projected gradient
    double tol_r = 1e-4;          // outer simplex diameter in log-width coords
    double tol_psi = 1e-7;        // outer psi spread, relative
    double jump_threshold = 1e-2; // max relative interface jump accepted

    int max_inner_iters = 5000;
    int max_outer_evals = 150;    // per multi-start
    unsigned long seed = 12345;   // jitter for the outer multi-start

    CoulombKernel kernel() const { return CoulombKernel{kappa}; }

    /// Constraint residual accepted for a converged bundle.
    double constraint_tol() const { return std::max(1e4 * tol_nehari, 1e-10); }
};

inline void validate_config(const SolverConfig& c) {
    const auto bad = [](const std::string& field) {
        throw SolverError(Errc::ConfigError, "invalid field '" + field + "'");
    };
    if (!(c.p > 2.5 && c.p < 5.0)) bad("p");
    if (c.k < 0) bad("k");
    if (c.points_per_annulus < 4) bad("points_per_annulus");
    if (!(c.r_infty > 0.0) || !std::isfinite(c.r_infty)) bad("r_infty");
    if (!(c.kappa > 0.0) || !std::isfinite(c.kappa)) bad("kappa");
    if (!(c.tol_nehari > 0.0)) bad("tol_nehari");
    if (!(c.tol_grad > 0.0)) bad("tol_grad");
    if (!(c.tol_r > 0.0)) bad("tol_r");
    if (!(c.tol_psi > 0.0)) bad("tol_psi");
    if (!(c.jump_threshold > 0.0)) bad("jump_threshold");
    if (c.max_inner_iters < 1) bad("max_inner_iters");
    if (c.max_outer_evals < 1) bad("max_outer_evals");
}

} // namespace choquard

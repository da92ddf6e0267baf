#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "choquard/config.hpp"
#include "choquard/energy.hpp"
#include "choquard/errors.hpp"
#include "choquard/field.hpp"
#include "choquard/inner_solver.hpp"
#include "choquard/nehari.hpp"

namespace choquard {

/// Residual threshold for the glued-profile ODE check at production grids.
inline constexpr double kOdeResidualThreshold = 1e-3;

/// Everything needed to decide whether the glued bundle is a k-node solution.
struct VerificationReport {
    std::vector<double> interface_jumps;  // |w_+ - w_-| per interface
    std::vector<double> relative_jumps;   // |w_+ - w_-| / max |W'|
    double ode_residual = 0.0;
    int sign_changes = 0;
    double strauss_ratio = 0.0;           // max |W(t)| t / ||W||_H1
    double nehari_identity_error = 0.0;   // |E - (1/2 - 1/(2p)) sum d_i| / |E|
    bool passed = false;
};

/// Signed derivative mismatch w_- - w_+ at each partition radius, from
/// three-point one-sided stencils on either side.
inline std::vector<double> interface_jumps(const SolutionBundle& bundle) {
    const GridPtr& grid = bundle.components.front().grid;
    std::vector<double> jumps;
    const int k = grid->partition.k();
    jumps.reserve(k);
    for (int l = 1; l <= k; ++l) {
        const std::vector<double> dl = region_derivative(*grid, l, bundle.components[l - 1].values);
        const std::vector<double> dr = region_derivative(*grid, l + 1, bundle.components[l].values);
        jumps.push_back(dl.back() - dr.front());
    }
    return jumps;
}

/// Number of strict sign alternations among nodes with |W| above
/// threshold * max |W|.
inline int count_sign_changes(const RadialField& w, double threshold) {
    const double cut = threshold * max_abs(w.values);
    int changes = 0, last = 0;
    for (double v : w.values) {
        if (std::abs(v) <= cut) continue;
        const int s = v > 0.0 ? 1 : -1;
        if (last != 0 && s != last) ++changes;
        last = s;
    }
    return changes;
}

/// Normalized max-norm residual of
///   -(t^2 W')' + t^2 W = t V(t) |W|^{p-2} W,   V = potential of |W|^p,
/// over interior nodes, excluding a two-node collar around each interface
/// where the pre-matching profile is only C^0.
inline double ode_residual_glued(const RadialField& w, const CoulombKernel& kern, double p) {
    check_exponent(p);
    const RadialGrid& g = *w.grid;
    const double wmax = max_abs(w.values);
    if (wmax == 0.0) return 0.0;

    RadialField v{w.grid, std::vector<double>(g.size())};
    for (std::size_t j = 0; j < g.size(); ++j) v.values[j] = std::pow(std::abs(w.values[j]), p);
    const Potential pot = potential_fast(kern, v);

    const std::size_t m = static_cast<std::size_t>(g.points_per_annulus);
    double worst = 0.0;
    for (std::size_t j = 1; j + 1 < g.size(); ++j) {
        const std::size_t below = j - (j % m); // nearest region edge at or below j
        bool in_collar = false;
        if (below > 0 && j - below <= 2) in_collar = true;
        if (below + m + 1 < g.size() && below + m - j <= 2) in_collar = true;
        if (in_collar) continue;
        const auto& t = g.nodes;
        const double dl = t[j] - t[j - 1], dr = t[j + 1] - t[j];
        const double ql = 0.5 * (t[j] + t[j - 1]), qr = 0.5 * (t[j] + t[j + 1]);
        const double flux = (qr * qr * (w.values[j + 1] - w.values[j]) / dr -
                             ql * ql * (w.values[j] - w.values[j - 1]) / dl) /
                            (0.5 * (dl + dr));
        const double lhs = -flux + t[j] * t[j] * w.values[j];
        const double rhs = t[j] * pot.values[j] * signed_power(w.values[j], p);
        worst = std::max(worst, std::abs(lhs - rhs) / wmax);
    }
    return worst;
}

/// max_t |W(t)| t / ||W||_H1; bounded across refinements by the Strauss
/// inequality for radial H^1 functions.
inline double strauss_check(const RadialField& w) {
    const double norm_sq = h1_norm_sq(w);
    if (norm_sq <= 0.0) throw SolverError(Errc::ZeroField, "strauss_check of the zero field");
    double best = 0.0;
    for (std::size_t j = 0; j < w.values.size(); ++j)
        best = std::max(best, std::abs(w.values[j]) * w.grid->nodes[j]);
    return best / std::sqrt(norm_sq);
}

namespace detail {

inline double interp_linear(const std::vector<double>& xs, const std::vector<double>& ys,
                            double x) {
    if (x <= xs.front()) return ys.front();
    if (x >= xs.back()) return ys.back();
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const std::size_t hi = static_cast<std::size_t>(it - xs.begin());
    const double s = (x - xs[hi - 1]) / (xs[hi] - xs[hi - 1]);
    return (1.0 - s) * ys[hi - 1] + s * ys[hi];
}

} // namespace detail

/// The corner construction behind the interface-matching argument: bridge the
/// two components adjacent to interface l linearly over (r_l - delta,
/// r_l + delta), re-split at the bridge zero, reproject onto the Nehari set of
/// the shifted partition, and compare energies.
///
/// Returns (predicted, actual) with predicted = -(delta/4) r_l^2 (w_+ - w_-)^2
/// and actual = E(Z) - E(W). For a genuinely mismatched interface both are
/// negative and their ratio tends to 1 as delta -> 0.
inline std::pair<double, double> jump_energy_gain(const SolutionBundle& bundle, int l,
                                                  double delta, const CoulombKernel& kern) {
    const GridPtr& grid = bundle.components.front().grid;
    const int k = grid->partition.k();
    if (l < 1 || l > k)
        throw SolverError(Errc::DeltaTooLarge, "interface index out of range");
    const double r_l = grid->partition.radii[l - 1];
    const double left_edge = (l == 1) ? 0.0 : grid->partition.radii[l - 2];
    const double right_edge = (l == k) ? grid->r_infty : grid->partition.radii[l];
    if (!(delta > 0.0) || delta >= 0.5 * std::min(r_l - left_edge, right_edge - r_l))
        throw SolverError(Errc::DeltaTooLarge,
                          "delta must be below half the adjacent annulus widths");

    const std::vector<double> jumps = interface_jumps(bundle);
    const double jump = jumps[l - 1];
    const double predicted = -0.25 * delta * r_l * r_l * jump * jump;

    const auto& wl = bundle.components[l - 1].values;
    const auto& wr = bundle.components[l].values;
    const double a = detail::interp_linear(grid->nodes, wl, r_l - delta);
    const double b = detail::interp_linear(grid->nodes, wr, r_l + delta);
    if (!(a * b < 0.0))
        throw SolverError(Errc::DegenerateData, "bridge endpoints do not change sign");
    const double s_bar = (r_l - delta) + 2.0 * delta * a / (a - b);

    const auto bridge = [&](double t) {
        if (t <= r_l - delta) return detail::interp_linear(grid->nodes, wl, t);
        if (t >= r_l + delta) return detail::interp_linear(grid->nodes, wr, t);
        return a + (b - a) * (t - (r_l - delta)) / (2.0 * delta);
    };

    std::vector<double> radii = grid->partition.radii;
    radii[l - 1] = s_bar;
    const GridPtr shifted = build_grid(make_partition(radii), grid->points_per_annulus,
                                       grid->r_infty);

    std::vector<ComponentField> z;
    z.reserve(k + 1);
    for (int i = 1; i <= k + 1; ++i) {
        if (i == l || i == l + 1) {
            z.push_back(make_component(shifted, i, bridge));
        } else {
            const auto& src = bundle.components[i - 1].values;
            z.push_back(make_component(shifted, i, [&](double t) {
                return detail::interp_linear(grid->nodes, src, t);
            }));
        }
    }
    const InteractionData data = interaction_data(z, kern, bundle.p);
    const NehariTuple tuple = project(data, bundle.p, 1e-12);
    const double actual = phi_value(tuple.t, data, bundle.p) - bundle.energy;
    return {predicted, actual};
}

/// Runs every certification check on a converged bundle.
inline VerificationReport verify(const SolutionBundle& bundle, const SolverConfig& config) {
    const CoulombKernel kern = config.kernel();
    VerificationReport report;

    const RadialField w = glue(bundle.components);
    const double dmax = max_abs_derivative(w);
    for (double j : interface_jumps(bundle)) {
        report.interface_jumps.push_back(std::abs(j));
        report.relative_jumps.push_back(dmax > 0.0 ? std::abs(j) / dmax : 0.0);
    }
    report.ode_residual = ode_residual_glued(w, kern, config.p);
    report.sign_changes = count_sign_changes(w, 1e-6);
    report.strauss_ratio = strauss_check(w);

    double norm_total = 0.0;
    for (const auto& c : bundle.components) norm_total += h_norm_sq(c);
    report.nehari_identity_error =
        std::abs(bundle.energy - (0.5 - 0.5 / config.p) * norm_total) / std::abs(bundle.energy);

    bool jumps_ok = true;
    for (double rj : report.relative_jumps) jumps_ok = jumps_ok && rj <= config.jump_threshold;
    report.passed = jumps_ok && report.ode_residual <= kOdeResidualThreshold &&
                    report.sign_changes == config.k && report.nehari_identity_error <= 1e-8 &&
                    std::isfinite(report.strauss_ratio);
    return report;
}

} // namespace choquard

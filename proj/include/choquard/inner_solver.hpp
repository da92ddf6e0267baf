#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <utility>
#include <vector>

#include "choquard/config.hpp"
#include "choquard/energy.hpp"
#include "choquard/errors.hpp"
#include "choquard/field.hpp"
#include "choquard/nehari.hpp"

namespace choquard {

/// Converged minimizer of E restricted to the Nehari set for one partition.
struct SolutionBundle {
    std::vector<ComponentField> components; // alternating sign pattern
    double energy = 0.0;
    double constraint_residual = 0.0; // max_i |F_i| / max_i a_i
    double gradient_norm = 0.0;       // sqrt(sum_i ||g_i||_i^2)
    AnnularPartition partition;
    double p = 0.0;
    int iterations = 0;
    NehariTuple nehari;                 // last projection, carries certification
    std::vector<double> energy_history; // energies of accepted iterates
};

namespace detail {

/// Working state of one iterate: sign-patterned components together with
/// their norms, Gram matrix and per-component Coulomb potentials. Potentials
/// are kept so projection rescaling never re-integrates the kernel.
struct Iterate {
    std::vector<ComponentField> comps;
    Eigen::VectorXd a;
    Eigen::MatrixXd B;
    std::vector<Potential> pots; // potential of |u_i|^p
    double energy = 0.0;
};

inline Iterate evaluate_iterate(std::vector<ComponentField> comps, const CoulombKernel& kern,
                                double p) {
    Iterate it;
    const int n = static_cast<int>(comps.size());
    it.comps = std::move(comps);
    it.a = norms_vector(it.comps);
    it.pots.reserve(n);
    std::vector<RadialField> powers;
    powers.reserve(n);
    for (const auto& c : it.comps) powers.push_back(component_power(c, p));
    for (const auto& v : powers) it.pots.push_back(potential_fast(kern, v));
    it.B.resize(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            it.B(i, j) = coulomb_energy_with(it.pots[i], powers[j]);
            it.B(j, i) = it.B(i, j);
        }
    it.energy = energy_from(it.a, it.B, p);
    return it;
}

/// Projects the iterate onto the Nehari set and rescales all cached data.
inline NehariTuple project_iterate(Iterate& it, double p, double tol) {
    InteractionData data{it.a, it.B};
    const NehariTuple tuple = project(data, p, tol);
    const int n = static_cast<int>(it.comps.size());
    Eigen::VectorXd tp(n);
    for (int i = 0; i < n; ++i) tp[i] = std::pow(tuple.t[i], p);
    for (int i = 0; i < n; ++i) {
        for (double& v : it.comps[i].values) v *= tuple.t[i];
        for (double& v : it.pots[i].values) v *= tp[i];
        for (double& v : it.pots[i].phi) v *= tp[i];
        it.a[i] *= tuple.t[i] * tuple.t[i];
        for (int j = 0; j < n; ++j) it.B(i, j) *= tp[i] * tp[j];
    }
    it.energy = energy_from(it.a, it.B, p);
    return tuple;
}

inline Potential glued_potential(const Iterate& it) {
    Potential sum = it.pots.front();
    for (std::size_t i = 1; i < it.pots.size(); ++i)
        for (std::size_t j = 0; j < sum.values.size(); ++j) {
            sum.values[j] += it.pots[i].values[j];
            sum.phi[j] += it.pots[i].phi[j];
        }
    return sum;
}

inline void check_collapse(const Eigen::VectorXd& a) {
    const double amax = a.maxCoeff();
    for (int i = 0; i < a.size(); ++i)
        if (std::sqrt(a[i]) < 1e-6 * std::sqrt(amax))
            throw SolverError(Errc::ComponentCollapsed,
                              "component norm vanished; bad partition or configuration");
}

} // namespace detail

/// Per region, a sin^2 bump with alternating sign; the unbounded region gets
/// a sin^2 ramp times exp(-(t - r_k)) so it decays toward r_infty. The tuple
/// is Nehari-projected before it is returned.
inline std::vector<ComponentField> initial_guess(const GridPtr& grid, const CoulombKernel& kern,
                                                 double p, double tol_nehari) {
    check_exponent(p);
    const int regions = grid->num_annuli();
    std::vector<ComponentField> comps;
    comps.reserve(regions);
    for (int i = 1; i <= regions; ++i) {
        const double left = grid->nodes[grid->region_begin(i)];
        const double right = grid->nodes[grid->region_end(i)];
        const double width = right - left;
        ComponentField c = make_component(grid, i, [&](double t) {
            constexpr double pi = std::numbers::pi;
            const double s = (t - left) / width;
            if (i == regions) {
                const double s0 = 0.15;
                const double up = std::sin(0.5 * pi * std::min(s, s0) / s0);
                const double down = std::sin(0.5 * pi * std::min(1.0 - s, s0) / s0);
                return up * up * down * down * std::exp(-(t - left));
            }
            const double b = std::sin(pi * s);
            return b * b;
        });
        comps.push_back(std::move(c));
    }
    comps = apply_sign_pattern(std::move(comps));
    detail::Iterate it = detail::evaluate_iterate(std::move(comps), kern, p);
    detail::project_iterate(it, p, tol_nehari);
    return std::move(it.comps);
}

/// Projected-gradient minimization of E over the Nehari set at a fixed
/// partition: H^1-preconditioned gradient step on each component, sign
/// pattern, Nehari reprojection, with a Barzilai-Borwein trial step and
/// backtracking on the composite energy. Stops when the projected gradient,
/// the constraint residual and the reprojection scaling all settle.
inline SolutionBundle minimize_fixed_partition(const GridPtr& grid, const SolverConfig& config,
                                               std::vector<ComponentField> start) {
    check_exponent(config.p);
    const CoulombKernel kern = config.kernel();
    const double p = config.p;

    detail::Iterate cur = detail::evaluate_iterate(apply_sign_pattern(std::move(start)), kern, p);
    NehariTuple tuple = detail::project_iterate(cur, p, config.tol_nehari);
    double t_deviation = (tuple.t - Eigen::VectorXd::Ones(tuple.t.size())).cwiseAbs().maxCoeff();
    detail::check_collapse(cur.a);

    SolutionBundle bundle;
    bundle.partition = grid->partition;
    bundle.p = p;
    bundle.energy_history.push_back(cur.energy);

    std::vector<ComponentField> grads, prev_comps, prev_grads;
    double step = 1.0;
    bool converged = false;

    for (int iter = 0; iter <= config.max_inner_iters; ++iter) {
        const Potential glued = detail::glued_potential(cur);
        grads = h_gradient(cur.comps, p, glued);
        double gnorm_sq = 0.0;
        for (const auto& g : grads) gnorm_sq += h_norm_sq(g);
        const double gnorm = std::sqrt(gnorm_sq);

        const double cres = (cur.a - cur.B.rowwise().sum()).cwiseAbs().maxCoeff() /
                            cur.a.maxCoeff();

        bundle.gradient_norm = gnorm;
        bundle.constraint_residual = cres;
        bundle.iterations = iter;
        if (gnorm <= config.tol_grad && cres <= config.constraint_tol() && t_deviation <= 1e-5) {
            converged = true;
            break;
        }
        if (iter == config.max_inner_iters) break;

        // BB1 step from the previous accepted move, clipped to a safe range.
        if (!prev_comps.empty()) {
            double du_du = 0.0, du_dg = 0.0;
            for (std::size_t i = 0; i < grads.size(); ++i) {
                ComponentField du = cur.comps[i], dg = grads[i];
                for (std::size_t j = 0; j < du.values.size(); ++j) {
                    du.values[j] -= prev_comps[i].values[j];
                    dg.values[j] -= prev_grads[i].values[j];
                }
                du_du += detail::region_h1_pairing(*grid, du.annulus, du.values, du.values);
                du_dg += detail::region_h1_pairing(*grid, du.annulus, du.values, dg.values);
            }
            if (du_dg > 0.0) step = std::clamp(du_du / du_dg, 1e-4, 1e2);
        }

        prev_comps = cur.comps;
        prev_grads = grads;

        bool accepted = false;
        double s = step;
        for (int bt = 0; bt < 45 && !accepted; ++bt) {
            std::vector<ComponentField> trial = cur.comps;
            for (std::size_t i = 0; i < trial.size(); ++i)
                for (std::size_t j = 0; j < trial[i].values.size(); ++j)
                    trial[i].values[j] -= s * grads[i].values[j];
            trial = apply_sign_pattern(std::move(trial));
            try {
                detail::Iterate cand = detail::evaluate_iterate(std::move(trial), kern, p);
                const NehariTuple cand_tuple = detail::project_iterate(cand, p, config.tol_nehari);
                if (cand.energy < cur.energy) {
                    cur = std::move(cand);
                    tuple = cand_tuple;
                    t_deviation =
                        (tuple.t - Eigen::VectorXd::Ones(tuple.t.size())).cwiseAbs().maxCoeff();
                    accepted = true;
                    step = s;
                    break;
                }
            } catch (const SolverError&) {
                // trial left the admissible cone; shorten the step
            }
            s *= 0.5;
            if (s < 1e-12) break;
        }
        if (!accepted)
            throw SolverError(Errc::MaxIterationsExceeded,
                              "line search stalled before reaching tolerances");

        detail::check_collapse(cur.a);
        bundle.energy_history.push_back(cur.energy);
    }

    if (!converged)
        throw SolverError(Errc::MaxIterationsExceeded, "inner iteration budget exhausted");

    bundle.components = cur.comps;
    bundle.energy = cur.energy;
    bundle.nehari = tuple;
    return bundle;
}

inline SolutionBundle minimize_fixed_partition(const GridPtr& grid, const SolverConfig& config) {
    return minimize_fixed_partition(
        grid, config, initial_guess(grid, config.kernel(), config.p, config.tol_nehari));
}

/// Max-norm residual of the radial strong form
///   -(t^2 u_i')' + t^2 u_i - t^2 Phi |u_i|^{p-2} u_i
/// over the interior nodes of each region, each normalized by max |u_i|.
/// A zero bundle is reported as 0 with *degenerate set.
inline double euler_lagrange_residual(const SolutionBundle& bundle, const CoulombKernel& kern,
                                      bool* degenerate = nullptr) {
    if (degenerate) *degenerate = false;
    const GridPtr& grid = bundle.components.front().grid;
    const RadialField w = glue(bundle.components);
    RadialField v{grid, std::vector<double>(grid->size())};
    for (std::size_t j = 0; j < v.values.size(); ++j)
        v.values[j] = std::pow(std::abs(w.values[j]), bundle.p);
    const Potential pot = potential_fast(kern, v);

    double worst = 0.0;
    for (const auto& u : bundle.components) {
        const double umax = max_abs(u.values);
        if (umax == 0.0) {
            if (degenerate) *degenerate = true;
            continue;
        }
        const std::size_t b = grid->region_begin(u.annulus), e = grid->region_end(u.annulus);
        for (std::size_t j = b + 1; j < e; ++j) {
            const auto& t = grid->nodes;
            const double dl = t[j] - t[j - 1], dr = t[j + 1] - t[j];
            const double ql = 0.5 * (t[j] + t[j - 1]), qr = 0.5 * (t[j] + t[j + 1]);
            const double flux = (qr * qr * (u.values[j + 1] - u.values[j]) / dr -
                                 ql * ql * (u.values[j] - u.values[j - 1]) / dl) /
                                (0.5 * (dl + dr));
            const double lhs = -flux + t[j] * t[j] * u.values[j];
            const double rhs = t[j] * pot.values[j] * signed_power(u.values[j], bundle.p);
            worst = std::max(worst, std::abs(lhs - rhs) / umax);
        }
    }
    return worst;
}

} // namespace choquard

#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "choquard/errors.hpp"
#include "choquard/field.hpp"
#include "choquard/grid.hpp"

namespace choquard {

/// Radial Coulomb kernel K(s,t) = kappa * s * t * min(s,t). kappa = 1 keeps
/// the dimensionless convention where the radial Nehari identity has no 4*pi;
/// kappa = 4*pi recovers the physical normalization (solutions rescale by a
/// constant factor).
struct CoulombKernel {
    double kappa = 1.0;
};

inline double kernel(const CoulombKernel& k, double s, double t) {
    return k.kappa * s * t * std::min(s, t);
}

/// V_f(t) = kappa * [ int_0^t f(s) s^2 ds + t * int_t^R f(s) s ds ], i.e. the
/// min-kernel integral t*phi(t) of the Green representation. phi stores the
/// potential itself, with the t -> 0 limit filled in at the origin.
struct Potential {
    GridPtr grid;
    double kappa = 1.0;
    std::vector<double> values; // V_f(t_j)
    std::vector<double> phi;    // V_f(t_j) / t_j, phi(0) = kappa * int f s ds
};

namespace detail {

// Neumaier-compensated accumulator; the prefix sums feed differences of
// nearly equal magnitudes, and the fast-vs-direct agreement budget is 1e-12.
struct Kahan {
    double sum = 0.0, comp = 0.0;

    void add(double x) {
        const double t = sum + x;
        comp += (std::abs(sum) >= std::abs(x)) ? (sum - t) + x : (x - t) + sum;
        sum = t;
    }
    double value() const { return sum + comp; }
};

} // namespace detail

/// One-pass evaluation via cumulative trapezoid sums: O(n) for all nodes.
inline Potential potential_fast(const CoulombKernel& kern, const RadialField& f) {
    const RadialGrid& g = *f.grid;
    const std::size_t n = g.size();
    Potential out{f.grid, kern.kappa, std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};

    // inner[j] = int_0^{t_j} f s^2 ds, outer[j] = int_{t_j}^{R} f s ds.
    std::vector<double> inner(n), outer(n);
    detail::Kahan acc;
    inner[0] = 0.0;
    for (std::size_t j = 0; j + 1 < n; ++j) {
        const double dt = g.nodes[j + 1] - g.nodes[j];
        acc.add(0.5 * dt * (f.values[j] * g.nodes[j] * g.nodes[j] +
                            f.values[j + 1] * g.nodes[j + 1] * g.nodes[j + 1]));
        inner[j + 1] = acc.value();
    }
    acc = {};
    outer[n - 1] = 0.0;
    for (std::size_t j = n - 1; j > 0; --j) {
        const double dt = g.nodes[j] - g.nodes[j - 1];
        acc.add(0.5 * dt * (f.values[j] * g.nodes[j] + f.values[j - 1] * g.nodes[j - 1]));
        outer[j - 1] = acc.value();
    }
    for (std::size_t j = 0; j < n; ++j) {
        out.values[j] = kern.kappa * (inner[j] + g.nodes[j] * outer[j]);
        out.phi[j] = (j == 0) ? kern.kappa * outer[0] : out.values[j] / g.nodes[j];
    }
    return out;
}

/// Same quadrature as potential_fast via an explicit double loop over nodes.
/// O(n^2); kept as the verification oracle for the prefix-sum path.
inline Potential potential_direct(const CoulombKernel& kern, const RadialField& f) {
    const RadialGrid& g = *f.grid;
    const std::size_t n = g.size();
    Potential out{f.grid, kern.kappa, std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};

    for (std::size_t j = 0; j < n; ++j) {
        const double t = g.nodes[j];
        detail::Kahan acc;
        for (std::size_t i = 0; i < n; ++i) {
            const double s = g.nodes[i];
            acc.add(g.w_dt[i] * f.values[i] * s * std::min(s, t));
        }
        out.values[j] = kern.kappa * acc.value();
    }
    detail::Kahan lim;
    for (std::size_t i = 0; i < n; ++i)
        lim.add(g.w_dt[i] * f.values[i] * g.nodes[i]);
    for (std::size_t j = 0; j < n; ++j)
        out.phi[j] = (j == 0) ? kern.kappa * lim.value() : out.values[j] / g.nodes[j];
    return out;
}

/// D(f,g) = int g(t) V_f(t) t dt with a precomputed potential.
inline double coulomb_energy_with(const Potential& vf, const RadialField& gfield) {
    if (vf.grid.get() != gfield.grid.get())
        throw SolverError(Errc::GridMismatch, "potential and field live on different grids");
    const RadialGrid& g = *gfield.grid;
    detail::Kahan acc;
    for (std::size_t j = 0; j < g.size(); ++j)
        acc.add(g.w_dt[j] * gfield.values[j] * g.nodes[j] * vf.values[j]);
    return acc.value();
}

/// Coulomb bilinear energy D(f,g); symmetric and positive semidefinite
/// (the nodal kernel matrix is a scaled Brownian-motion covariance).
inline double coulomb_energy(const CoulombKernel& kern, const RadialField& f,
                             const RadialField& gfield) {
    if (f.grid.get() != gfield.grid.get())
        throw SolverError(Errc::GridMismatch, "coulomb_energy fields live on different grids");
    return coulomb_energy_with(potential_fast(kern, f), gfield);
}

} // namespace choquard

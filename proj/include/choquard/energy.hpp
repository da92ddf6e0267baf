#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <vector>

#include "choquard/coulomb.hpp"
#include "choquard/errors.hpp"
#include "choquard/field.hpp"
#include "choquard/grid.hpp"

namespace choquard {

inline void check_exponent(double p) {
    if (!(p > 2.5 && p < 5.0))
        throw SolverError(Errc::ExponentOutOfRange, "p must lie in (5/2, 5)");
}

/// |u|^{p-2} u with the continuous extension 0 at u = 0.
inline double signed_power(double u, double p) {
    if (u == 0.0) return 0.0;
    return std::pow(std::abs(u), p - 2.0) * u;
}

/// Nodal |u|^p of a component, as a full-grid field.
inline RadialField component_power(const ComponentField& u, double p) {
    RadialField v{u.grid, std::vector<double>(u.grid->size(), 0.0)};
    for (std::size_t j = u.free_begin(); j <= u.free_end(); ++j)
        v.values[j] = std::pow(std::abs(u.values[j]), p);
    return v;
}

/// d_i = ||u_i||_i^2 for each component.
inline Eigen::VectorXd norms_vector(const std::vector<ComponentField>& components) {
    Eigen::VectorXd d(components.size());
    for (std::size_t i = 0; i < components.size(); ++i) d[i] = h_norm_sq(components[i]);
    return d;
}

/// B_ij = D(|u_i|^p, |u_j|^p). Built from one potential per component and
/// symmetrized by construction (the i <= j entry is computed once).
inline Eigen::MatrixXd interaction_matrix(const std::vector<ComponentField>& components,
                                          const CoulombKernel& kern, double p) {
    const int n = static_cast<int>(components.size());
    std::vector<RadialField> powers;
    powers.reserve(n);
    for (const auto& c : components) powers.push_back(component_power(c, p));

    Eigen::MatrixXd b(n, n);
    for (int i = 0; i < n; ++i) {
        const Potential vi = potential_fast(kern, powers[i]);
        for (int j = i; j < n; ++j) {
            b(i, j) = coulomb_energy_with(vi, powers[j]);
            b(j, i) = b(i, j);
        }
    }
    return b;
}

/// Decomposed energy E = 1/2 sum d_i - 1/(2p) sum_ij B_ij.
struct EnergyBreakdown {
    Eigen::VectorXd norms_sq;     // d_i
    Eigen::MatrixXd interactions; // B_ij; diagonal = self terms
    double total = 0.0;

    double norm_total() const { return norms_sq.sum(); }
};

inline double energy_from(const Eigen::VectorXd& d, const Eigen::MatrixXd& b, double p) {
    return 0.5 * d.sum() - b.sum() / (2.0 * p);
}

inline EnergyBreakdown total_energy(const std::vector<ComponentField>& components,
                                    const CoulombKernel& kern, double p) {
    check_exponent(p);
    EnergyBreakdown out;
    out.norms_sq = norms_vector(components);
    out.interactions = interaction_matrix(components, kern, p);
    out.total = energy_from(out.norms_sq, out.interactions, p);
    return out;
}

/// Single-field energy I(W) = 1/2 ||W||^2 - 1/(2p) D(|W|^p, |W|^p).
inline double single_field_energy(const RadialField& w, const CoulombKernel& kern, double p) {
    check_exponent(p);
    RadialField v{w.grid, std::vector<double>(w.grid->size())};
    for (std::size_t j = 0; j < w.values.size(); ++j)
        v.values[j] = std::pow(std::abs(w.values[j]), p);
    return 0.5 * h1_norm_sq(w) - coulomb_energy(kern, v, v) / (2.0 * p);
}

/// F_i = ||u_i||^2 - sum_j D(|u_i|^p, |u_j|^p); all zero on the Nehari set.
inline Eigen::VectorXd constraint_values(const std::vector<ComponentField>& components,
                                         const CoulombKernel& kern, double p) {
    check_exponent(p);
    const Eigen::VectorXd d = norms_vector(components);
    const Eigen::MatrixXd b = interaction_matrix(components, kern, p);
    return d - b.rowwise().sum();
}

/// Solves Q x = rhs on the free nodes of one region, where Q is the matrix of
/// the discrete H^1(t^2 dt) inner product (symmetric positive definite
/// tridiagonal; the Thomas sweep needs no pivoting).
inline std::vector<double> helmholtz_solve(const RadialGrid& g, int region,
                                           const std::vector<double>& rhs_free) {
    const std::size_t b = g.region_begin(region), e = g.region_end(region);
    const std::size_t lo = b + (region == 1 ? 0 : 1), hi = e - 1;
    const std::size_t n = hi - lo + 1;

    std::vector<double> diag(n, 0.0), off(n > 0 ? n - 1 : 0, 0.0);
    for (std::size_t a = b; a < e; ++a) { // interval (a, a+1)
        const double dt = g.nodes[a + 1] - g.nodes[a];
        const double q = (g.nodes[a] * g.nodes[a] + g.nodes[a + 1] * g.nodes[a + 1]) / (2.0 * dt);
        if (a >= lo && a <= hi) diag[a - lo] += q;
        if (a + 1 >= lo && a + 1 <= hi) diag[a + 1 - lo] += q;
        if (a >= lo && a + 1 <= hi) off[a - lo] -= q;
    }
    for (std::size_t j = lo; j <= hi; ++j) diag[j - lo] += g.w_t2[j];

    std::vector<double> c(n, 0.0), x(rhs_free);
    double piv = diag[0];
    if (!(piv > 0.0)) throw SolverError(Errc::SingularSolve, "nonpositive pivot");
    c[0] = n > 1 ? off[0] / piv : 0.0;
    x[0] /= piv;
    for (std::size_t j = 1; j < n; ++j) {
        piv = diag[j] - off[j - 1] * c[j - 1];
        if (!(piv > 0.0)) throw SolverError(Errc::SingularSolve, "nonpositive pivot");
        if (j < n - 1) c[j] = off[j] / piv;
        x[j] = (x[j] - off[j - 1] * x[j - 1]) / piv;
    }
    for (std::size_t j = n - 1; j-- > 0;) x[j] -= c[j] * x[j + 1];
    return x;
}

/// Riesz representative of dE restricted to H_i in the H^1 inner product:
/// g_i = u_i - S_i[ w_j t_j^2 Phi_j |u_i|^{p-2} u_i ] with Phi the potential
/// of |W|^p for the glued field W. Directional derivatives then satisfy
/// <g_i, v>_{H_i} = dE(u)[v] to round-off for the discrete E.
inline std::vector<ComponentField> h_gradient(const std::vector<ComponentField>& components,
                                              double p, const Potential& glued_potential) {
    std::vector<ComponentField> grads;
    grads.reserve(components.size());
    for (const auto& u : components) {
        const RadialGrid& g = *u.grid;
        const std::size_t lo = u.free_begin(), hi = u.free_end();
        std::vector<double> rhs(hi - lo + 1);
        for (std::size_t j = lo; j <= hi; ++j)
            rhs[j - lo] = g.w_t2[j] * glued_potential.phi[j] * signed_power(u.values[j], p);
        const std::vector<double> s = helmholtz_solve(g, u.annulus, rhs);

        ComponentField gi = zero_component(u.grid, u.annulus);
        for (std::size_t j = lo; j <= hi; ++j)
            gi.values[j] = u.values[j] - s[j - lo];
        grads.push_back(std::move(gi));
    }
    return grads;
}

inline std::vector<ComponentField> h_gradient(const std::vector<ComponentField>& components,
                                              const CoulombKernel& kern, double p) {
    check_exponent(p);
    RadialField vw{components.front().grid,
                   std::vector<double>(components.front().grid->size(), 0.0)};
    for (const auto& c : components) {
        const RadialField v = component_power(c, p);
        for (std::size_t j = 0; j < vw.values.size(); ++j) vw.values[j] += v.values[j];
    }
    return h_gradient(components, p, potential_fast(kern, vw));
}

} // namespace choquard

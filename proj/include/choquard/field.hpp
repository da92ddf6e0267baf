#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include "choquard/errors.hpp"
#include "choquard/grid.hpp"

namespace choquard {

/// Radial function sampled on every grid node. Callers keep values finite and
/// zero at r_infty; the value at t = 0 is unconstrained.
struct RadialField {
    GridPtr grid;
    std::vector<double> values;
};

/// One component of the decomposed problem: supported on a single region,
/// vanishing at both region edges (at t = 0 only for annulus >= 2).
struct ComponentField {
    GridPtr grid;
    int annulus = 1; // 1-based
    std::vector<double> values;

    /// First and last node index where the component may be nonzero.
    std::size_t free_begin() const {
        return grid->region_begin(annulus) + (annulus == 1 ? 0 : 1);
    }
    std::size_t free_end() const { return grid->region_end(annulus) - 1; }
};

inline ComponentField zero_component(GridPtr grid, int annulus) {
    ComponentField c{std::move(grid), annulus, {}};
    c.values.assign(c.grid->size(), 0.0);
    return c;
}

/// Builds a component by sampling f on the free nodes of its region.
inline ComponentField make_component(GridPtr grid, int annulus,
                                     const std::function<double(double)>& f) {
    ComponentField c = zero_component(std::move(grid), annulus);
    for (std::size_t j = c.free_begin(); j <= c.free_end(); ++j)
        c.values[j] = f(c.grid->nodes[j]);
    return c;
}

/// Zeroes every node outside the component's free range.
inline void clamp_support(ComponentField& c) {
    const std::size_t lo = c.free_begin(), hi = c.free_end();
    for (std::size_t j = 0; j < c.values.size(); ++j)
        if (j < lo || j > hi) c.values[j] = 0.0;
}

namespace detail {

/// H^1(t^2 dt) pairing of two nodal vectors over the intervals and nodes of
/// one region: piecewise-constant slopes on intervals, trapezoid mass.
/// The region edges carry value 0 (except node 0), so using the global node
/// weights for the mass term is exact and gluing is additive by construction.
inline double region_h1_pairing(const RadialGrid& g, int region,
                                const std::vector<double>& u, const std::vector<double>& v) {
    const std::size_t b = g.region_begin(region), e = g.region_end(region);
    double acc = 0.0;
    for (std::size_t j = b; j < e; ++j) {
        const double dt = g.nodes[j + 1] - g.nodes[j];
        const double q = 0.5 * dt * (g.nodes[j] * g.nodes[j] + g.nodes[j + 1] * g.nodes[j + 1]);
        acc += q * ((u[j + 1] - u[j]) / dt) * ((v[j + 1] - v[j]) / dt);
    }
    for (std::size_t j = b; j <= e; ++j)
        acc += g.w_t2[j] * u[j] * v[j];
    return acc;
}

/// Derivative of the quadratic interpolant through (t0,y0),(t1,y1),(t2,y2) at x.
inline double three_point_derivative(double t0, double t1, double t2,
                                     double y0, double y1, double y2, double x) {
    return y0 * (2 * x - t1 - t2) / ((t0 - t1) * (t0 - t2)) +
           y1 * (2 * x - t0 - t2) / ((t1 - t0) * (t1 - t2)) +
           y2 * (2 * x - t0 - t1) / ((t2 - t0) * (t2 - t1));
}

} // namespace detail

/// ||u||_i^2 = integral over B_i of (u'^2 + u^2) t^2 dt.
inline double h_norm_sq(const ComponentField& u) {
    return detail::region_h1_pairing(*u.grid, u.annulus, u.values, u.values);
}

/// H^1 inner product of two components on the same region.
inline double h_inner(const ComponentField& u, const ComponentField& v) {
    if (u.grid.get() != v.grid.get() || u.annulus != v.annulus)
        throw SolverError(Errc::GridMismatch, "h_inner requires the same grid and region");
    return detail::region_h1_pairing(*u.grid, u.annulus, u.values, v.values);
}

/// Full H^1(t^2 dt) norm of a glued field, accumulated region by region. The
/// intervals never straddle an interface, so this equals the sum of the
/// component norms exactly.
inline double h1_norm_sq(const RadialField& w) {
    double acc = 0.0;
    for (int i = 1; i <= w.grid->num_annuli(); ++i)
        acc += detail::region_h1_pairing(*w.grid, i, w.values, w.values);
    return acc;
}

/// Replaces component i by (-1)^{i+1} |component i| pointwise.
inline std::vector<ComponentField> apply_sign_pattern(std::vector<ComponentField> components) {
    for (auto& c : components) {
        const double sgn = (c.annulus % 2 == 1) ? 1.0 : -1.0;
        for (double& v : c.values) v = sgn * std::abs(v);
    }
    return components;
}

/// Pointwise sum of one component per region.
inline RadialField glue(const std::vector<ComponentField>& components) {
    if (components.empty())
        throw SolverError(Errc::GridMismatch, "glue needs at least one component");
    const GridPtr& grid = components.front().grid;
    std::vector<char> seen(grid->num_annuli() + 1, 0);
    RadialField w{grid, std::vector<double>(grid->size(), 0.0)};
    for (const auto& c : components) {
        if (c.grid.get() != grid.get())
            throw SolverError(Errc::GridMismatch, "glue components live on different grids");
        if (c.annulus < 1 || c.annulus > grid->num_annuli() || seen[c.annulus])
            throw SolverError(Errc::GridMismatch, "glue needs exactly one component per region");
        seen[c.annulus] = 1;
        for (std::size_t j = 0; j < w.values.size(); ++j) w.values[j] += c.values[j];
    }
    for (int i = 1; i <= grid->num_annuli(); ++i)
        if (!seen[i])
            throw SolverError(Errc::GridMismatch, "glue needs exactly one component per region");
    return w;
}

/// Nodal derivative over one region: centered three-point stencils inside,
/// one-sided at the region edges. Returns values indexed by global node id
/// for region_begin..region_end.
inline std::vector<double> region_derivative(const RadialGrid& g, int region,
                                             const std::vector<double>& u) {
    const std::size_t b = g.region_begin(region), e = g.region_end(region);
    std::vector<double> d(e - b + 1, 0.0);
    const auto& t = g.nodes;
    for (std::size_t j = b; j <= e; ++j) {
        std::size_t s = j;
        if (s == b) s = b + 1;
        if (s == e) s = e - 1;
        d[j - b] = detail::three_point_derivative(t[s - 1], t[s], t[s + 1],
                                                  u[s - 1], u[s], u[s + 1], t[j]);
    }
    return d;
}

/// max_t |W'(t)|, taking the larger one-sided slope at interfaces.
inline double max_abs_derivative(const RadialField& w) {
    double best = 0.0;
    for (int i = 1; i <= w.grid->num_annuli(); ++i)
        for (double d : region_derivative(*w.grid, i, w.values))
            best = std::max(best, std::abs(d));
    return best;
}

inline double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

} // namespace choquard

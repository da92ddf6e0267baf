#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <utility>
#include <vector>

#include "choquard/errors.hpp"

namespace choquard {

/// Ordered interface radii 0 < r_1 < ... < r_k. They split (0, inf) into a
/// ball, k-1 annuli and an exterior region; k = 0 leaves the single region.
struct AnnularPartition {
    std::vector<double> radii;

    int k() const { return static_cast<int>(radii.size()); }
    int num_regions() const { return k() + 1; }
};

inline AnnularPartition make_partition(std::vector<double> radii) {
    double prev = 0.0;
    for (double r : radii) {
        if (!std::isfinite(r))
            throw SolverError(Errc::NonFiniteRadius, "partition radius is not finite");
        if (r <= prev)
            throw SolverError(Errc::NonIncreasingRadii,
                              "partition radii must satisfy 0 < r_1 < ... < r_k");
        prev = r;
    }
    return AnnularPartition{std::move(radii)};
}

/// Composite radial grid on [0, r_infty]. Every partition radius lands exactly
/// on a node, each region is subdivided uniformly, and trapezoidal quadrature
/// weights are stored for both the measure t^2 dt and plain dt.
struct RadialGrid {
    AnnularPartition partition;
    double r_infty = 0.0;
    int points_per_annulus = 0; // intervals per region

    std::vector<double> nodes; // nodes[0] = 0, nodes.back() = r_infty
    std::vector<double> w_t2;  // weights for integrals against t^2 dt
    std::vector<double> w_dt;  // weights for integrals against dt
    std::vector<int> annulus_of; // 1..k+1; interface nodes are tagged with the right region

    std::size_t size() const { return nodes.size(); }
    int num_annuli() const { return partition.num_regions(); }

    /// Node index of the left/right edge of region i (1-based).
    std::size_t region_begin(int i) const {
        return static_cast<std::size_t>(i - 1) * points_per_annulus;
    }
    std::size_t region_end(int i) const {
        return static_cast<std::size_t>(i) * points_per_annulus;
    }

    /// True at the partition radii r_1..r_k (not at 0 or r_infty).
    bool is_interface(std::size_t j) const {
        if (j == 0 || j + 1 >= nodes.size()) return false;
        return j % static_cast<std::size_t>(points_per_annulus) == 0;
    }

    /// Uniform spacing inside region i.
    double spacing(int i) const {
        return nodes[region_begin(i) + 1] - nodes[region_begin(i)];
    }
};

using GridPtr = std::shared_ptr<const RadialGrid>;

inline GridPtr build_grid(const AnnularPartition& p, int points_per_annulus, double r_infty) {
    if (points_per_annulus < 4)
        throw SolverError(Errc::ConfigError, "points_per_annulus must be >= 4");
    if (!p.radii.empty() && r_infty <= p.radii.back())
        throw SolverError(Errc::TruncationTooSmall, "r_infty must exceed the last partition radius");
    if (!(r_infty > 0.0) || !std::isfinite(r_infty))
        throw SolverError(Errc::TruncationTooSmall, "r_infty must be positive and finite");

    auto grid = std::make_shared<RadialGrid>();
    grid->partition = p;
    grid->r_infty = r_infty;
    grid->points_per_annulus = points_per_annulus;

    const int regions = p.num_regions();
    const int m = points_per_annulus;
    const std::size_t n_nodes = static_cast<std::size_t>(regions) * m + 1;
    grid->nodes.resize(n_nodes);
    grid->annulus_of.resize(n_nodes);

    for (int i = 1; i <= regions; ++i) {
        const double left = (i == 1) ? 0.0 : p.radii[i - 2];
        const double right = (i == regions) ? r_infty : p.radii[i - 1];
        const double h = (right - left) / m;
        const std::size_t base = static_cast<std::size_t>(i - 1) * m;
        for (int j = 0; j <= m; ++j)
            grid->nodes[base + j] = (j == m) ? right : left + h * j;
    }
    // Interfaces belong to the right-hand region; 0 belongs to region 1.
    for (std::size_t j = 0; j < n_nodes; ++j)
        grid->annulus_of[j] = std::min<int>(regions, static_cast<int>(j / m) + 1);

    grid->w_t2.assign(n_nodes, 0.0);
    grid->w_dt.assign(n_nodes, 0.0);
    for (std::size_t j = 0; j + 1 < n_nodes; ++j) {
        const double dt = grid->nodes[j + 1] - grid->nodes[j];
        grid->w_dt[j] += 0.5 * dt;
        grid->w_dt[j + 1] += 0.5 * dt;
        grid->w_t2[j] += 0.5 * dt * grid->nodes[j] * grid->nodes[j];
        grid->w_t2[j + 1] += 0.5 * dt * grid->nodes[j + 1] * grid->nodes[j + 1];
    }
    return grid;
}

} // namespace choquard

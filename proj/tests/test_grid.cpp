#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "choquard/grid.hpp"

using namespace choquard;

TEST_CASE("make_partition validates ordering") {
    const AnnularPartition p = make_partition({1.0, 2.0, 3.0});
    REQUIRE(p.k() == 3);
    REQUIRE(p.num_regions() == 4);

    REQUIRE(make_partition({}).k() == 0);

    REQUIRE_THROWS_AS(make_partition({2.0, 1.0}), SolverError);
    REQUIRE_THROWS_AS(make_partition({1.0, 1.0}), SolverError);
    REQUIRE_THROWS_AS(make_partition({0.0}), SolverError);
    REQUIRE_THROWS_AS(make_partition({-1.0}), SolverError);
    REQUIRE_THROWS_AS(make_partition({std::numeric_limits<double>::quiet_NaN()}), SolverError);
    REQUIRE_THROWS_AS(make_partition({std::numeric_limits<double>::infinity()}), SolverError);
}

TEST_CASE("make_partition round-trips its own radii") {
    const AnnularPartition p = make_partition({0.5, 1.25, 7.75});
    const AnnularPartition q = make_partition(p.radii);
    REQUIRE(p.radii == q.radii);
}

TEST_CASE("build_grid produces the documented node layout") {
    const GridPtr g = build_grid(make_partition({}), 1000, 20.0);
    REQUIRE(g->size() == 1001);
    REQUIRE(g->nodes.front() == 0.0);
    REQUIRE(g->nodes.back() == 20.0);

    const GridPtr g2 = build_grid(make_partition({1.0, 2.0, 3.0}), 16, 5.0);
    REQUIRE(g2->size() == 4 * 16 + 1);
    // interfaces land exactly on nodes
    REQUIRE(g2->nodes[16] == 1.0);
    REQUIRE(g2->nodes[32] == 2.0);
    REQUIRE(g2->nodes[48] == 3.0);
    REQUIRE(g2->is_interface(16));
    REQUIRE(g2->is_interface(32));
    REQUIRE_FALSE(g2->is_interface(0));
    REQUIRE_FALSE(g2->is_interface(64));
    REQUIRE(g2->annulus_of[0] == 1);
    REQUIRE(g2->annulus_of[16] == 2);
    REQUIRE(g2->annulus_of[64] == 4);
}

TEST_CASE("build_grid rejects bad inputs") {
    REQUIRE_THROWS_AS(build_grid(make_partition({3.0}), 100, 2.0), SolverError);
    REQUIRE_THROWS_AS(build_grid(make_partition({3.0}), 100, 3.0), SolverError);
    REQUIRE_THROWS_AS(build_grid(make_partition({}), 3, 10.0), SolverError);
}

TEST_CASE("quadrature weights integrate monomials at second order") {
    // int_0^1 t^m t^2 dt on [0,1]
    const auto integral = [](int n, int m) {
        const GridPtr g = build_grid(make_partition({}), n, 1.0);
        double acc = 0.0;
        for (std::size_t j = 0; j < g->size(); ++j)
            acc += g->w_t2[j] * std::pow(g->nodes[j], m);
        return acc;
    };

    REQUIRE_THAT(integral(1000, 0), Catch::Matchers::WithinAbs(1.0 / 3.0, 1e-6));
    REQUIRE_THAT(integral(1000, 1), Catch::Matchers::WithinAbs(0.25, 1e-6));

    for (int m = 0; m <= 3; ++m) {
        const double exact = 1.0 / (m + 3);
        const double e1 = std::abs(integral(50, m) - exact);
        const double e2 = std::abs(integral(100, m) - exact);
        REQUIRE(e2 < e1 / 3.0); // O(h^2): doubling the grid shrinks error ~4x
    }
}

TEST_CASE("weight sum approximates the truncated volume factor") {
    const GridPtr g = build_grid(make_partition({2.0, 5.0}), 400, 12.0);
    double acc = 0.0;
    for (double w : g->w_t2) acc += w;
    REQUIRE_THAT(acc, Catch::Matchers::WithinRel(12.0 * 12.0 * 12.0 / 3.0, 1e-4));
    for (double w : g->w_t2) REQUIRE(w >= 0.0);
}

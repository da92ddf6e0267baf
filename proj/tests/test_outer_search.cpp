#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>

#include "choquard/outer_search.hpp"

using namespace choquard;

namespace {

SolverConfig coarse_config(int k) {
    SolverConfig c;
    c.p = 3.0;
    c.k = k;
    c.points_per_annulus = 250;
    c.r_infty = 18.0;
    c.max_outer_evals = 80;
    c.tol_r = 5e-4;
    return c;
}

} // namespace

TEST_CASE("psi caches and traces evaluations") {
    const SolverConfig c = coarse_config(1);
    PsiSolver solver(c);

    const PsiEvaluation& first = solver.psi(make_partition({1.8}));
    REQUIRE(solver.trace().size() == 1);
    const PsiEvaluation& again = solver.psi(make_partition({1.8}));
    REQUIRE(solver.trace().size() == 1); // cache hit, no new evaluation
    REQUIRE(std::memcmp(&first.psi, &again.psi, sizeof(double)) == 0);

    SECTION("k = 0 is a single inner solve") {
        const SolverConfig c0 = coarse_config(0);
        PsiSolver s0(c0);
        const PsiEvaluation& eval = s0.psi(AnnularPartition{});
        REQUIRE(eval.psi == eval.bundle.energy);
        REQUIRE(eval.psi > 0.0);
    }
}

TEST_CASE("psi blows up toward the partition-cone boundary") {
    const SolverConfig c = coarse_config(1);
    PsiSolver solver(c);

    SECTION("shrinking the first annulus raises psi") {
        const double w1 = solver.psi(make_partition({0.5})).psi;
        const double w2 = solver.psi(make_partition({0.2})).psi;
        const double w3 = solver.psi(make_partition({0.1})).psi;
        REQUIRE(w1 < w2);
        REQUIRE(w2 < w3);
    }

    SECTION("pushing the last radius out raises psi") {
        const double a = solver.psi(make_partition({2.0})).psi;
        const double b = solver.psi(make_partition({4.0})).psi;
        const double d = solver.psi(make_partition({8.0})).psi;
        REQUIRE(a < b);
        REQUIRE(b < d);
    }

    SECTION("continuity probe: differences shrink with the perturbation") {
        const double base = solver.psi(make_partition({1.5})).psi;
        const double d2 = std::abs(solver.psi(make_partition({1.5 * 1.01})).psi - base);
        const double d3 = std::abs(solver.psi(make_partition({1.5 * 1.001})).psi - base);
        REQUIRE(d3 < d2);
    }
}

TEST_CASE("optimize_partition finds the k = 1 minimum") {
    const SolverConfig c = coarse_config(1);
    const OuterResult res = optimize_partition(c);
    REQUIRE(res.converged);
    REQUIRE(res.best_partition.k() == 1);

    // best psi is at most every traced evaluation
    for (const auto& [partition, value] : res.trace)
        REQUIRE(res.best_bundle.energy <= value + 1e-12);

    SECTION("local minimality under +-1% probes") {
        PsiSolver probe(c);
        const double r = res.best_partition.radii[0];
        const double best = res.best_bundle.energy;
        REQUIRE(probe.psi(make_partition({r * 1.01})).psi >= best - 1e-10);
        REQUIRE(probe.psi(make_partition({r * 0.99})).psi >= best - 1e-10);
    }

    SECTION("an absurd hint near r_infty is reseeded and still converges") {
        const AnnularPartition absurd = make_partition({c.r_infty / 1.01});
        const OuterResult rescue = optimize_partition(c, absurd, 1);
        REQUIRE(rescue.converged);
        REQUIRE_THAT(rescue.best_partition.radii[0],
                     Catch::Matchers::WithinRel(res.best_partition.radii[0], 0.05));
    }
}

TEST_CASE("optimize_partition needs k >= 1") {
    REQUIRE_THROWS_AS(optimize_partition(coarse_config(0)), SolverError);
}

TEST_CASE("guard violations are penalized, never best") {
    const SolverConfig c = coarse_config(1);
    PsiSolver solver(c);
    Eigen::VectorXd x(1);
    x[0] = std::log(0.99 * c.r_infty); // r_1 beyond the guard
    REQUIRE(detail::penalized_psi(solver, x) >= 1e6);
    REQUIRE(solver.trace().empty()); // no inner solve was spent on it
}

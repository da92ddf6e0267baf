#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "choquard/inner_solver.hpp"
#include "oracles.hpp"

using namespace choquard;

namespace {

SolverConfig fast_config(double p, int k) {
    SolverConfig c;
    c.p = p;
    c.k = k;
    c.points_per_annulus = 400;
    c.r_infty = 20.0;
    return c;
}

} // namespace

TEST_CASE("initial_guess produces a projected nonzero tuple") {
    const SolverConfig c = fast_config(3.0, 2);
    const GridPtr grid = build_grid(make_partition({1.0, 2.5}), 200, 16.0);
    const auto comps = initial_guess(grid, c.kernel(), c.p, c.tol_nehari);

    REQUIRE(comps.size() == 3);
    for (const auto& u : comps) REQUIRE(h_norm_sq(u) > 0.0);

    const Eigen::VectorXd f = constraint_values(comps, c.kernel(), c.p);
    const Eigen::VectorXd a = norms_vector(comps);
    REQUIRE(f.cwiseAbs().maxCoeff() <= 1e-9 * a.maxCoeff());

    SECTION("k = 0: a single positive bump") {
        const GridPtr ball = build_grid(make_partition({}), 200, 16.0);
        const auto single = initial_guess(ball, c.kernel(), c.p, c.tol_nehari);
        REQUIRE(single.size() == 1);
        for (double v : single[0].values) REQUIRE(v >= 0.0);
        REQUIRE(max_abs(single[0].values) > 0.0);
    }
}

TEST_CASE("ground state converges and matches the independent flow oracle") {
    const SolverConfig c = fast_config(3.0, 0);
    const GridPtr grid = build_grid(make_partition({}), 800, 20.0);
    const SolutionBundle bundle = minimize_fixed_partition(grid, c);

    REQUIRE(bundle.constraint_residual <= 1e-8);
    REQUIRE(bundle.gradient_norm <= 1e-6);
    REQUIRE(bundle.energy > 0.0);

    SECTION("Nehari energy identity") {
        double norm_total = 0.0;
        for (const auto& u : bundle.components) norm_total += h_norm_sq(u);
        REQUIRE_THAT(bundle.energy,
                     Catch::Matchers::WithinRel((0.5 - 0.5 / c.p) * norm_total, 1e-8));
    }

    SECTION("independent-discretization oracle within 0.5%") {
        const oracle::GroundState gs = oracle::ground_state_flow(c.p, c.kappa, 24.0, 1001);
        REQUIRE(gs.converged);
        REQUIRE(std::abs(bundle.energy - gs.energy) <= 5e-3 * bundle.energy);
    }

    SECTION("monotone descent over accepted iterates") {
        for (std::size_t i = 1; i < bundle.energy_history.size(); ++i)
            REQUIRE(bundle.energy_history[i] <= bundle.energy_history[i - 1] + 1e-12);
    }
}

TEST_CASE("k = 1 bundle keeps the sign pattern and the energy identity") {
    const SolverConfig c = fast_config(3.0, 1);
    const GridPtr grid = build_grid(make_partition({2.0}), 400, 20.0);
    const SolutionBundle bundle = minimize_fixed_partition(grid, c);

    double norm_total = 0.0;
    for (const auto& u : bundle.components) norm_total += h_norm_sq(u);
    REQUIRE_THAT(bundle.energy,
                 Catch::Matchers::WithinRel((0.5 - 0.5 / c.p) * norm_total, 1e-8));

    for (const auto& u : bundle.components) {
        const double sgn = (u.annulus % 2 == 1) ? 1.0 : -1.0;
        double interior_min = 1e300;
        for (std::size_t j = u.free_begin(); j <= u.free_end(); ++j)
            interior_min = std::min(interior_min, sgn * u.values[j]);
        REQUIRE(interior_min >= 0.0);
        REQUIRE(max_abs(u.values) > 0.0);
    }
}

TEST_CASE("restart from a converged bundle re-converges immediately") {
    const SolverConfig c = fast_config(3.0, 1);
    const GridPtr grid = build_grid(make_partition({1.5}), 300, 18.0);
    const SolutionBundle first = minimize_fixed_partition(grid, c);
    const SolutionBundle second = minimize_fixed_partition(grid, c, first.components);
    REQUIRE(second.iterations <= 2);
    REQUIRE_THAT(second.energy, Catch::Matchers::WithinRel(first.energy, 1e-10));
}

TEST_CASE("euler_lagrange_residual") {
    const SolverConfig c = fast_config(3.0, 0);

    SECTION("zero bundle reports 0 with the degenerate flag") {
        const GridPtr grid = build_grid(make_partition({}), 64, 8.0);
        SolutionBundle zero;
        zero.components = {zero_component(grid, 1)};
        zero.p = 3.0;
        bool degenerate = false;
        REQUIRE(euler_lagrange_residual(zero, c.kernel(), &degenerate) == 0.0);
        REQUIRE(degenerate);
    }

    SECTION("second-order decay under grid refinement") {
        double res[2];
        int idx = 0;
        for (int m : {400, 800}) {
            const GridPtr grid = build_grid(make_partition({}), m, 20.0);
            const SolutionBundle bundle = minimize_fixed_partition(grid, c);
            res[idx++] = euler_lagrange_residual(bundle, c.kernel());
        }
        REQUIRE(res[0] < 0.1);
        REQUIRE(res[1] <= res[0] / 3.0); // ~4x drop for an O(h^2) scheme
    }
}

TEST_CASE("component collapse is detected") {
    Eigen::VectorXd a(2);
    a << 1.0, 1e-14;
    REQUIRE_THROWS_AS(detail::check_collapse(a), SolverError);
}

TEST_CASE("iteration budget is enforced") {
    SolverConfig c = fast_config(3.0, 0);
    c.max_inner_iters = 1;
    c.tol_grad = 1e-14; // unreachable in one step
    const GridPtr grid = build_grid(make_partition({}), 200, 16.0);
    REQUIRE_THROWS_AS(minimize_fixed_partition(grid, c), SolverError);
}

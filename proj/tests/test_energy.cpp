#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "choquard/energy.hpp"
#include "choquard/nehari.hpp"

using namespace choquard;

namespace {

std::vector<ComponentField> smooth_components(const GridPtr& grid, std::mt19937& rng) {
    std::uniform_real_distribution<double> amp(0.6, 1.4);
    std::vector<ComponentField> comps;
    for (int i = 1; i <= grid->num_annuli(); ++i) {
        const double a = amp(rng), b = amp(rng);
        const double left = grid->nodes[grid->region_begin(i)];
        const double right = grid->nodes[grid->region_end(i)];
        comps.push_back(make_component(grid, i, [=](double t) {
            const double s = (t - left) / (right - left);
            return a * s * (1.0 - s) * (1.0 + 0.5 * b * s);
        }));
    }
    return apply_sign_pattern(std::move(comps));
}

} // namespace

TEST_CASE("exponent validation") {
    const GridPtr g = build_grid(make_partition({}), 32, 4.0);
    const std::vector<ComponentField> comps = {zero_component(g, 1)};
    REQUIRE_THROWS_AS(total_energy(comps, CoulombKernel{}, 2.4), SolverError);
    REQUIRE_THROWS_AS(total_energy(comps, CoulombKernel{}, 5.0), SolverError);
    REQUIRE_THROWS_AS(constraint_values(comps, CoulombKernel{}, 2.5), SolverError);
}

TEST_CASE("total_energy closed forms") {
    const GridPtr g = build_grid(make_partition({}), 200, 6.0);
    const CoulombKernel kern;
    const double p = 3.0;

    SECTION("zero components give zero energy") {
        const std::vector<ComponentField> comps = {zero_component(g, 1)};
        REQUIRE(total_energy(comps, kern, p).total == 0.0);
    }

    SECTION("single component: E = a/2 - b/(2p)") {
        const ComponentField u = make_component(g, 1, [](double t) { return t * (6.0 - t); });
        const double a = h_norm_sq(u);
        const RadialField v = component_power(u, p);
        const double b = coulomb_energy(kern, v, v);
        const EnergyBreakdown e = total_energy({u}, kern, p);
        REQUIRE_THAT(e.total, Catch::Matchers::WithinRel(0.5 * a - b / (2.0 * p), 1e-13));
        REQUIRE_THAT(e.norms_sq[0], Catch::Matchers::WithinRel(a, 1e-13));
        REQUIRE_THAT(e.interactions(0, 0), Catch::Matchers::WithinRel(b, 1e-13));
    }

    SECTION("on a scalar Nehari point: E = (1/2 - 1/(2p)) ||u||^2") {
        const ComponentField u = make_component(g, 1, [](double t) { return t * (6.0 - t); });
        const double a = h_norm_sq(u);
        const RadialField v = component_power(u, p);
        const double b = coulomb_energy(kern, v, v);
        const double t = std::pow(a / b, 1.0 / (2.0 * p - 2.0));
        ComponentField tu = u;
        for (double& x : tu.values) x *= t;
        const EnergyBreakdown e = total_energy({tu}, kern, p);
        REQUIRE_THAT(e.total,
                     Catch::Matchers::WithinRel((0.5 - 0.5 / p) * t * t * a, 1e-10));
    }
}

TEST_CASE("decomposed energy equals the glued single-field energy") {
    const GridPtr g = build_grid(make_partition({1.2, 3.0}), 150, 9.0);
    std::mt19937 rng(5);
    const CoulombKernel kern;
    for (double p : {2.7, 3.0, 4.2}) {
        const auto comps = smooth_components(g, rng);
        const EnergyBreakdown e = total_energy(comps, kern, p);
        const double i_glued = single_field_energy(glue(comps), kern, p);
        REQUIRE_THAT(e.total, Catch::Matchers::WithinRel(i_glued, 1e-10));
    }
}

TEST_CASE("constraint sum identity") {
    const GridPtr g = build_grid(make_partition({1.0}), 180, 7.0);
    std::mt19937 rng(17);
    const CoulombKernel kern;
    const double p = 3.0;
    const auto comps = smooth_components(g, rng);

    const Eigen::VectorXd f = constraint_values(comps, kern, p);
    const RadialField w = glue(comps);
    RadialField v{g, std::vector<double>(g->size())};
    for (std::size_t j = 0; j < g->size(); ++j)
        v.values[j] = std::pow(std::abs(w.values[j]), p);
    const double full_interaction = coulomb_energy(kern, v, v);
    double norm_total = 0.0;
    for (const auto& c : comps) norm_total += h_norm_sq(c);
    REQUIRE_THAT(f.sum(),
                 Catch::Matchers::WithinRel(norm_total - full_interaction, 1e-10));
}

TEST_CASE("constraint scaling matches a from-scratch recomputation") {
    const GridPtr g = build_grid(make_partition({1.5}), 120, 6.0);
    std::mt19937 rng(29);
    const CoulombKernel kern;
    const double p = 3.2;
    const auto comps = smooth_components(g, rng);
    const Eigen::VectorXd a = norms_vector(comps);
    const Eigen::MatrixXd b = interaction_matrix(comps, kern, p);

    for (double t : {0.5, 1.3, 2.0}) {
        auto scaled = comps;
        for (double& x : scaled[0].values) x *= t;
        const Eigen::VectorXd f = constraint_values(scaled, kern, p);
        const double expected = t * t * a[0] - std::pow(t, 2.0 * p) * b(0, 0) -
                                std::pow(t, p) * b(0, 1);
        REQUIRE_THAT(f[0], Catch::Matchers::WithinRel(expected, 1e-11));
    }
}

TEST_CASE("h_gradient vanishes at zero and matches finite differences") {
    const GridPtr g = build_grid(make_partition({1.5}), 120, 8.0);
    const CoulombKernel kern;
    const double p = 3.0;

    SECTION("zero point is critical") {
        const std::vector<ComponentField> zeros = {zero_component(g, 1), zero_component(g, 2)};
        for (const auto& grad : h_gradient(zeros, kern, p))
            REQUIRE(max_abs(grad.values) == 0.0);
    }

    SECTION("directional derivatives") {
        std::mt19937 rng(41);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        const auto comps = smooth_components(g, rng);
        const auto grads = h_gradient(comps, kern, p);

        double worst = 0.0;
        for (int dir = 0; dir < 40; ++dir) {
            const int i = dir % 2;
            ComponentField v = zero_component(g, i + 1);
            for (std::size_t j = v.free_begin(); j <= v.free_end(); ++j) v.values[j] = u(rng);

            const double eps = 1e-5;
            auto up = comps, dn = comps;
            for (std::size_t j = 0; j < v.values.size(); ++j) {
                up[i].values[j] += eps * v.values[j];
                dn[i].values[j] -= eps * v.values[j];
            }
            const double fd = (total_energy(up, kern, p).total -
                               total_energy(dn, kern, p).total) / (2.0 * eps);
            const double an = h_inner(grads[i], v);
            worst = std::max(worst, std::abs(fd - an) / std::max(1.0, std::abs(fd)));
        }
        REQUIRE(worst <= 1e-5);
    }
}

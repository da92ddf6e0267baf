#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "choquard/config.hpp"
#include "choquard/errors.hpp"
#include "choquard/inner_solver.hpp"

namespace choquard {

/// One inner minimization: psi(r_k) = inf E over the Nehari set of r_k.
struct PsiEvaluation {
    AnnularPartition partition;
    double psi = 0.0;
    SolutionBundle bundle;
};

struct OuterResult {
    AnnularPartition best_partition;
    SolutionBundle best_bundle;
    std::vector<std::pair<AnnularPartition, double>> trace; // every fresh evaluation
    bool converged = false;
};

/// Cache key: radii rounded to 12 significant digits.
inline std::string partition_key(const AnnularPartition& p) {
    std::string key;
    char buf[32];
    for (double r : p.radii) {
        std::snprintf(buf, sizeof buf, "%.12g,", r);
        key += buf;
    }
    return key;
}

/// Evaluates and caches psi; repeated queries at identical radii return the
/// stored result bit-for-bit.
class PsiSolver {
public:
    explicit PsiSolver(const SolverConfig& config) : config_(config) {}

    const PsiEvaluation& psi(const AnnularPartition& partition) {
        const std::string key = partition_key(partition);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;

        const GridPtr grid = build_grid(partition, config_.points_per_annulus, config_.r_infty);
        PsiEvaluation eval;
        eval.partition = partition;
        eval.bundle = minimize_fixed_partition(grid, config_);
        eval.psi = eval.bundle.energy;
        trace_.emplace_back(partition, eval.psi);
        return cache_.emplace(key, std::move(eval)).first->second;
    }

    const std::vector<std::pair<AnnularPartition, double>>& trace() const { return trace_; }
    const SolverConfig& config() const { return config_; }

private:
    SolverConfig config_;
    std::map<std::string, PsiEvaluation> cache_;
    std::vector<std::pair<AnnularPartition, double>> trace_;
};

namespace detail {

inline AnnularPartition partition_from_logwidths(const Eigen::VectorXd& x) {
    std::vector<double> radii(x.size());
    double r = 0.0;
    for (int i = 0; i < x.size(); ++i) {
        r += std::exp(x[i]);
        radii[i] = r;
    }
    return AnnularPartition{std::move(radii)};
}

inline Eigen::VectorXd logwidths_of(const AnnularPartition& p) {
    Eigen::VectorXd x(p.k());
    double prev = 0.0;
    for (int i = 0; i < p.k(); ++i) {
        x[i] = std::log(p.radii[i] - prev);
        prev = p.radii[i];
    }
    return x;
}

/// Coercivity guard: the truncated domain cannot represent partitions with
/// r_k near or past r_infty, and psi blows up as an annulus degenerates.
/// Returns a positive violation measure, 0 when admissible.
inline double guard_violation(const AnnularPartition& p, const SolverConfig& c) {
    const double rk = p.radii.back();
    double v = 0.0;
    if (rk > 0.8 * c.r_infty) v += rk / (0.8 * c.r_infty) - 1.0;
    double min_width = p.radii.front();
    for (int i = 1; i < p.k(); ++i)
        min_width = std::min(min_width, p.radii[i] - p.radii[i - 1]);
    if (min_width < 1e-3 * rk) v += 1e-3 * rk / std::max(min_width, 1e-300) - 1.0;
    return v;
}

/// Barrier-penalized objective for the simplex search. Guard violations and
/// inner-solver failures map to large finite values with a slope back toward
/// the admissible cone, so the simplex always has something to follow.
inline double penalized_psi(PsiSolver& solver, const Eigen::VectorXd& x) {
    const AnnularPartition p = partition_from_logwidths(x);
    const double v = guard_violation(p, solver.config());
    if (v > 0.0) return 1e6 * (1.0 + v);
    try {
        return solver.psi(p).psi;
    } catch (const SolverError&) {
        return 1e6;
    }
}

struct SimplexPoint {
    Eigen::VectorXd x;
    double f = 0.0;
};

/// Textbook Nelder-Mead (reflection 1, expansion 2, contraction 1/2,
/// shrink 1/2). Returns true when both the simplex diameter and the psi
/// spread are inside tolerance before the evaluation budget runs out.
inline bool nelder_mead(PsiSolver& solver, std::vector<SimplexPoint>& simplex, int budget) {
    const SolverConfig& c = solver.config();
    int evals = 0;
    const auto feval = [&](const Eigen::VectorXd& x) {
        ++evals;
        return penalized_psi(solver, x);
    };
    for (auto& pt : simplex) pt.f = feval(pt.x);

    const int d = static_cast<int>(simplex.front().x.size());
    while (evals < budget) {
        std::sort(simplex.begin(), simplex.end(),
                  [](const SimplexPoint& a, const SimplexPoint& b) { return a.f < b.f; });

        double diameter = 0.0;
        for (const auto& pt : simplex)
            diameter = std::max(diameter, (pt.x - simplex.front().x).lpNorm<Eigen::Infinity>());
        const double spread = simplex.back().f - simplex.front().f;
        if (diameter <= c.tol_r && spread <= c.tol_psi * (1.0 + std::abs(simplex.front().f)))
            return true;

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
        for (std::size_t i = 0; i + 1 < simplex.size(); ++i) centroid += simplex[i].x;
        centroid /= static_cast<double>(simplex.size() - 1);

        SimplexPoint& worst = simplex.back();
        const Eigen::VectorXd xr = centroid + (centroid - worst.x);
        const double fr = feval(xr);
        if (fr < simplex.front().f) {
            const Eigen::VectorXd xe = centroid + 2.0 * (centroid - worst.x);
            const double fe = feval(xe);
            if (fe < fr) worst = {xe, fe};
            else worst = {xr, fr};
        } else if (fr < simplex[simplex.size() - 2].f) {
            worst = {xr, fr};
        } else {
            const bool outside = fr < worst.f;
            Eigen::VectorXd xc = centroid;
            if (outside) xc += 0.5 * (xr - centroid);
            else xc -= 0.5 * (centroid - worst.x);
            const double fc = feval(xc);
            if (fc < std::min(fr, worst.f)) {
                worst = {xc, fc};
            } else {
                for (std::size_t i = 1; i < simplex.size(); ++i) {
                    simplex[i].x = simplex.front().x + 0.5 * (simplex[i].x - simplex.front().x);
                    simplex[i].f = feval(simplex[i].x);
                }
            }
        }
    }
    return false;
}

inline std::vector<Eigen::VectorXd> seed_points(int k, const SolverConfig& config,
                                                const std::optional<AnnularPartition>& hint,
                                                int num_starts) {
    std::vector<Eigen::VectorXd> seeds;
    const auto widths_to_point = [&](std::vector<double> widths) {
        Eigen::VectorXd x(k);
        for (int i = 0; i < k; ++i) x[i] = std::log(widths[i]);
        return x;
    };

    if (hint) {
        seeds.push_back(logwidths_of(*hint));
    } else {
        std::vector<double> uniform(k, 2.0);
        std::vector<double> geometric(k);
        for (int i = 0; i < k; ++i) geometric[i] = 1.1 * std::pow(1.5, i);
        std::vector<double> wide(k, 1.5);
        wide[k - 1] = 4.0;
        seeds.push_back(widths_to_point(uniform));
        seeds.push_back(widths_to_point(geometric));
        seeds.push_back(widths_to_point(wide));
    }
    // Deterministic jitter fills out (or trims to) the requested start count.
    std::mt19937 rng(static_cast<unsigned>(config.seed));
    std::normal_distribution<double> gauss(0.0, 0.08);
    while (static_cast<int>(seeds.size()) < num_starts) {
        Eigen::VectorXd x = seeds[seeds.size() % (hint ? 1 : 3)];
        for (int i = 0; i < k; ++i) x[i] += gauss(rng);
        seeds.push_back(x);
    }
    seeds.resize(num_starts);

    // Reseed any start that the coercivity guard rejects.
    for (auto& x : seeds)
        if (guard_violation(partition_from_logwidths(x), config) > 0.0)
            x = widths_to_point(std::vector<double>(k, std::max(1.0, config.r_infty / (4.0 * (k + 1)))));
    return seeds;
}

} // namespace detail

/// Minimizes psi over the partition cone with multi-start Nelder-Mead in
/// log-width coordinates. Ties between starts are broken by lowest psi, then
/// by lexicographically smallest radii.
inline OuterResult optimize_partition(const SolverConfig& config,
                                      std::optional<AnnularPartition> hint = std::nullopt,
                                      int num_starts = 3) {
    if (config.k < 1)
        throw SolverError(Errc::SearchFailed, "optimize_partition needs k >= 1");
    validate_config(config);

    PsiSolver solver(config);
    const std::vector<Eigen::VectorXd> seeds =
        detail::seed_points(config.k, config, hint, num_starts);

    bool any_converged = false;
    std::optional<AnnularPartition> best;
    double best_psi = 0.0;
    for (const auto& seed : seeds) {
        std::vector<detail::SimplexPoint> simplex;
        simplex.push_back({seed, 0.0});
        for (int i = 0; i < config.k; ++i) {
            Eigen::VectorXd x = seed;
            x[i] += 0.15;
            simplex.push_back({x, 0.0});
        }
        const bool ok = detail::nelder_mead(solver, simplex, config.max_outer_evals);
        any_converged = any_converged || ok;

        std::sort(simplex.begin(), simplex.end(),
                  [](const detail::SimplexPoint& a, const detail::SimplexPoint& b) {
                      return a.f < b.f;
                  });
        const AnnularPartition cand = detail::partition_from_logwidths(simplex.front().x);
        if (detail::guard_violation(cand, config) > 0.0) continue;
        try {
            const double f = solver.psi(cand).psi;
            if (!best || f < best_psi ||
                (f == best_psi && cand.radii < best->radii)) {
                best = cand;
                best_psi = f;
            }
        } catch (const SolverError&) {
            continue;
        }
    }

    if (!best)
        throw SolverError(Errc::SearchFailed, "no admissible partition found");

    OuterResult result;
    result.best_partition = *best;
    result.best_bundle = solver.psi(*best).bundle;
    result.trace = solver.trace();
    result.converged = any_converged;
    return result;
}

} // namespace choquard

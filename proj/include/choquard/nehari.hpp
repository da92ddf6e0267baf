#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "choquard/energy.hpp"
#include "choquard/errors.hpp"

namespace choquard {

/// Scalar data of a component tuple: a_i = ||u_i||_i^2 and the Coulomb Gram
/// matrix B_ij = D(|u_i|^p, |u_j|^p). B is positive definite whenever the
/// |u_i|^p are nonzero with disjoint supports.
struct InteractionData {
    Eigen::VectorXd a;
    Eigen::MatrixXd B;

    int size() const { return static_cast<int>(a.size()); }
};

/// Rejects data that cannot come from nonzero components with disjoint
/// supports: nonpositive norms, or a Coulomb Gram matrix that fails its
/// Cholesky factorization (proportional |u_i|^p would make it singular).
inline void validate_interaction(const InteractionData& data) {
    for (int i = 0; i < data.size(); ++i)
        if (!(data.a[i] > 0.0) || !(data.B(i, i) > 0.0))
            throw SolverError(Errc::DegenerateData, "component with vanishing norm or self-energy");
    Eigen::LLT<Eigen::MatrixXd> llt(data.B);
    if (llt.info() != Eigen::Success)
        throw SolverError(Errc::DegenerateData, "interaction Gram matrix is not positive definite");
}

inline InteractionData interaction_data(const std::vector<ComponentField>& components,
                                        const CoulombKernel& kern, double p) {
    check_exponent(p);
    InteractionData data{norms_vector(components), interaction_matrix(components, kern, p)};
    validate_interaction(data);
    return data;
}

/// Result of the scaling solve: the unique positive tuple putting
/// (t_1 u_1, ..., t_{k+1} u_{k+1}) on the Nehari set, with certification data.
struct NehariTuple {
    Eigen::VectorXd t;
    double mu = 0.0;                     // homotopy parameter reached; 1 on success
    double min_eigenvalue_N_tilde = 0.0; // > 0 certifies the manifold property
    int newton_iterations = 0;
};

/// G_i(t; mu) = t_i^2 a_i - t_i^{2p} B_ii - mu sum_{j != i} t_i^p t_j^p B_ij.
inline Eigen::VectorXd scaling_residual(const Eigen::VectorXd& t, double mu,
                                        const InteractionData& data, double p) {
    const int n = data.size();
    Eigen::VectorXd tp(n);
    for (int i = 0; i < n; ++i) tp[i] = std::pow(t[i], p);
    Eigen::VectorXd g(n);
    for (int i = 0; i < n; ++i) {
        double cross = 0.0;
        for (int j = 0; j < n; ++j)
            if (j != i) cross += tp[j] * data.B(i, j);
        g[i] = t[i] * t[i] * data.a[i] - tp[i] * tp[i] * data.B(i, i) - mu * tp[i] * cross;
    }
    return g;
}

/// Exact Jacobian of scaling_residual in t.
inline Eigen::MatrixXd scaling_jacobian(const Eigen::VectorXd& t, double mu,
                                        const InteractionData& data, double p) {
    const int n = data.size();
    Eigen::VectorXd tp(n), tpm1(n);
    for (int i = 0; i < n; ++i) {
        tp[i] = std::pow(t[i], p);
        tpm1[i] = std::pow(t[i], p - 1.0);
    }
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i) {
        double cross = 0.0;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            cross += tp[j] * data.B(i, j);
            m(i, j) = -mu * p * tp[i] * tpm1[j] * data.B(i, j);
        }
        m(i, i) = 2.0 * t[i] * data.a[i] - 2.0 * p * tp[i] * tpm1[i] * data.B(i, i) -
                  mu * p * tpm1[i] * cross;
    }
    return m;
}

/// N~ at the scaled point: p (t_i^p t_j^p B_ij) + (p-2) diag(t_i^2 a_i).
/// Positive definite for p in (5/2, 5); its smallest eigenvalue certifies
/// that the constraint set is a manifold near the point.
inline Eigen::MatrixXd n_tilde_matrix(const InteractionData& data, const Eigen::VectorXd& t,
                                      double p) {
    const int n = data.size();
    Eigen::VectorXd tp(n);
    for (int i = 0; i < n; ++i) tp[i] = std::pow(t[i], p);
    Eigen::MatrixXd nt = p * (tp * tp.transpose()).cwiseProduct(data.B);
    for (int i = 0; i < n; ++i) nt(i, i) += (p - 2.0) * t[i] * t[i] * data.a[i];
    return nt;
}

/// N_ij = (d_{u_i} F_j) u_i at the scaled point, without using F = 0 to
/// simplify the diagonal (so det N = (-1)^{k+1} det N~ is a real check).
inline Eigen::MatrixXd manifold_matrix(const InteractionData& data, const Eigen::VectorXd& t,
                                       double p) {
    const int n = data.size();
    Eigen::VectorXd tp(n);
    for (int i = 0; i < n; ++i) tp[i] = std::pow(t[i], p);
    Eigen::MatrixXd nm(n, n);
    for (int i = 0; i < n; ++i) {
        double cross = 0.0;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const double dij = tp[i] * tp[j] * data.B(i, j);
            cross += dij;
            nm(i, j) = -p * dij;
        }
        nm(i, i) = 2.0 * t[i] * t[i] * data.a[i] - 2.0 * p * tp[i] * tp[i] * data.B(i, i) -
                   p * cross;
    }
    return nm;
}

inline double certify_manifold(const InteractionData& data, const Eigen::VectorXd& t, double p) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(n_tilde_matrix(data, t, p));
    return es.eigenvalues().minCoeff();
}

namespace detail {

// Damped Newton on G(t; mu) = 0 at fixed mu. Steps are clipped so no t_i
// drops below a tenth of its previous value, keeping the iterate in the
// positive orthant. Returns false on stagnation or bound violation.
inline bool newton_at_mu(Eigen::VectorXd& t, double mu, const InteractionData& data, double p,
                         double tol_abs, int& iterations) {
    constexpr int kMaxIter = 60;
    Eigen::VectorXd g = scaling_residual(t, mu, data, p);
    for (int it = 0; it < kMaxIter; ++it) {
        if (g.norm() <= tol_abs) return true;
        const Eigen::MatrixXd m = scaling_jacobian(t, mu, data, p);
        const Eigen::VectorXd step = m.partialPivLu().solve(-g);
        if (!step.allFinite()) return false;

        double smax = 1.0;
        for (int i = 0; i < t.size(); ++i)
            if (step[i] < 0.0) smax = std::min(smax, -0.9 * t[i] / step[i]);

        double s = smax;
        const double g0 = g.squaredNorm();
        bool accepted = false;
        for (int bt = 0; bt < 40; ++bt) {
            const Eigen::VectorXd trial = t + s * step;
            const Eigen::VectorXd gt = scaling_residual(trial, mu, data, p);
            if (gt.allFinite() && gt.squaredNorm() < g0 * (1.0 - 1e-4 * s)) {
                t = trial;
                g = gt;
                accepted = true;
                break;
            }
            s *= 0.5;
        }
        ++iterations;
        if (!accepted) return false;
        if (t.minCoeff() < 1e-8 || t.maxCoeff() > 1e8) return false;
    }
    return g.norm() <= tol_abs;
}

} // namespace detail

/// Projects interaction data onto the Nehari set: the unique positive tuple
/// with all G_i(t; 1) = 0. Starts from the decoupled mu = 0 closed form
/// t_i = (a_i / B_ii)^{1/(2p-2)} and continues mu -> 1 with adaptive steps;
/// an attempt to jump straight to mu = 1 is made first. The accepted tuple is
/// certified by the smallest eigenvalue of N~.
inline NehariTuple project(const InteractionData& data, double p, double tol) {
    check_exponent(p);
    const int n = data.size();
    for (int i = 0; i < n; ++i)
        if (!(data.a[i] > 0.0) || !(data.B(i, i) > 0.0))
            throw SolverError(Errc::DegenerateData, "projection needs a_i > 0 and B_ii > 0");

    const double tol_abs = tol * data.a.norm();
    NehariTuple out;
    out.t.resize(n);
    for (int i = 0; i < n; ++i)
        out.t[i] = std::pow(data.a[i] / data.B(i, i), 1.0 / (2.0 * p - 2.0));
    out.mu = 0.0;

    // The decoupled start is usually inside the mu = 1 Newton basin.
    {
        Eigen::VectorXd t = out.t;
        int iters = 0;
        if (detail::newton_at_mu(t, 1.0, data, p, tol_abs, iters)) {
            out.t = t;
            out.mu = 1.0;
            out.newton_iterations = iters;
        }
    }

    if (out.mu < 1.0) {
        double dmu = 0.1;
        Eigen::VectorXd t = out.t;
        while (out.mu < 1.0) {
            const double mu_try = std::min(1.0, out.mu + dmu);
            Eigen::VectorXd trial = t;
            int iters = 0;
            if (detail::newton_at_mu(trial, mu_try, data, p, tol_abs, iters)) {
                t = trial;
                out.mu = mu_try;
                out.newton_iterations += iters;
                if (iters <= 4) dmu = std::min(0.5, 2.0 * dmu);
            } else {
                dmu *= 0.5;
                if (dmu < 1e-6)
                    throw SolverError(Errc::HomotopyStalled, "homotopy step underflow");
            }
        }
        out.t = t;
    }

    if (!out.t.allFinite() || out.t.minCoeff() < 1e-8 || out.t.maxCoeff() > 1e8)
        throw SolverError(Errc::NewtonDiverged, "scaling tuple left the admissible range");

    out.min_eigenvalue_N_tilde = certify_manifold(data, out.t, p);
    if (!(out.min_eigenvalue_N_tilde > 0.0))
        throw SolverError(Errc::CertificationFailed, "N~ is not positive definite");
    return out;
}

/// phi(c) = E(c_1 u_1, ..., c_{k+1} u_{k+1}) expressed through the data.
/// The projection tuple is its unique maximizer on the positive orthant.
inline double phi_value(const Eigen::VectorXd& c, const InteractionData& data, double p) {
    const int n = data.size();
    Eigen::VectorXd cp(n);
    for (int i = 0; i < n; ++i) cp[i] = std::pow(c[i], p);
    double quad = 0.0, inter = 0.0;
    for (int i = 0; i < n; ++i) {
        quad += c[i] * c[i] * data.a[i];
        for (int j = 0; j < n; ++j) inter += cp[i] * cp[j] * data.B(i, j);
    }
    return 0.5 * quad - inter / (2.0 * p);
}

/// Rescales each component by its tuple entry.
inline std::vector<ComponentField> scale_components(std::vector<ComponentField> components,
                                                    const Eigen::VectorXd& t) {
    for (std::size_t i = 0; i < components.size(); ++i)
        for (double& v : components[i].values) v *= t[static_cast<int>(i)];
    return components;
}

} // namespace choquard

#pragma once

#include <cmath>
#include <vector>

#include "qcrb/fisher.hpp"
#include "qcrb/registry.hpp"
#include "qcrb/sampling.hpp"

namespace qcrb::testing {

inline RVector vec1(double a) {
    RVector v(1);
    v(0) = a;
    return v;
}

inline RVector vec3(double a, double b, double c) {
    RVector v(3);
    v << a, b, c;
    return v;
}

/// One-parameter diagonal qubit family rho = (I + t sigma_z)/2. Used as the
/// canonical binomial test model; equivalent to classical-diag up to an
/// affine reparameterization.
inline StateModel make_zline_model(double half_width = 0.95) {
    RVector lo(1), hi(1);
    lo(0) = -half_width;
    hi(0) = half_width;
    return StateModel(
        "zline", 2, ParameterDomain(lo, hi),
        [](const RVector& t) -> CMatrix { return 0.5 * (identity(2) + t(0) * pauli_z()); },
        [](const RVector&, int) -> CMatrix { return 0.5 * pauli_z(); });
}

/// Random Hermitian matrix with entries of order one.
inline CMatrix random_hermitian(int dim, RngStream& rng) {
    CMatrix a(dim, dim);
    for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) {
            a(i, j) = Complex(rng.next_normal(), rng.next_normal());
        }
    }
    return 0.5 * (a + a.adjoint().eval());
}

/// Random density operator (full rank almost surely).
inline CMatrix random_density(int dim, RngStream& rng) {
    CMatrix a(dim, dim);
    for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) {
            a(i, j) = Complex(rng.next_normal(), rng.next_normal());
        }
    }
    CMatrix rho = a * a.adjoint();
    return rho / rho.trace();
}

/// Random rank-one POVM with `outcomes` elements via the frame construction
/// E_k = S^{-1/2} w_k w_k^dagger S^{-1/2}. Vectors are renormalized jittered
/// draws so every element carries appreciable weight.
inline Povm random_povm(int dim, int outcomes, RngStream& rng) {
    std::vector<Eigen::VectorXcd> ws;
    CMatrix s = CMatrix::Zero(dim, dim);
    for (int k = 0; k < outcomes; ++k) {
        Eigen::VectorXcd w(dim);
        for (int i = 0; i < dim; ++i) w(i) = Complex(rng.next_normal(), rng.next_normal());
        w *= (0.7 + 0.6 * rng.next_double()) / w.norm();
        ws.push_back(w);
        s += w * w.adjoint();
    }
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(s);
    CMatrix inv_sqrt = eig.eigenvectors() *
                       eig.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                       eig.eigenvectors().adjoint();
    Povm p;
    for (int k = 0; k < outcomes; ++k) {
        CMatrix e = inv_sqrt * (ws[static_cast<size_t>(k)] * ws[static_cast<size_t>(k)].adjoint()) * inv_sqrt;
        p.outcomes.push_back({"r" + std::to_string(k), 0.5 * (e + e.adjoint().eval())});
    }
    return p;
}

/// Independent Fisher oracle: central finite differences of log q_k(theta).
/// J_ij = sum_k q_k(theta) [d_i log q_k][d_j log q_k].
inline RMatrix fd_log_likelihood_fisher(const StateModel& model, const Povm& p,
                                        const RVector& theta, double h = 1e-5) {
    const int m = model.num_params();
    RVector q = outcome_distribution(model.state(theta), p);
    RMatrix dlog(m, p.size());
    for (int i = 0; i < m; ++i) {
        RVector tp = theta, tm = theta;
        tp(i) += h;
        tm(i) -= h;
        RVector qp = outcome_distribution(model.state(tp), p);
        RVector qm = outcome_distribution(model.state(tm), p);
        for (int k = 0; k < p.size(); ++k) {
            dlog(i, k) = (std::log(qp(k)) - std::log(qm(k))) / (2.0 * h);
        }
    }
    RMatrix j = RMatrix::Zero(m, m);
    for (int k = 0; k < p.size(); ++k) {
        j += q(k) * dlog.col(k) * dlog.col(k).transpose();
    }
    return j;
}

/// Interior point drawn uniformly from the box shrunk by `margin` of its
/// width on each side.
inline RVector random_interior_point(const ParameterDomain& domain, RngStream& rng,
                                     double margin = 0.15) {
    RVector theta(domain.dim());
    for (int i = 0; i < domain.dim(); ++i) {
        double lo = domain.lower()(i), hi = domain.upper()(i);
        double w = hi - lo;
        theta(i) = rng.next_uniform(lo + margin * w, hi - margin * w);
    }
    return theta;
}

} // namespace qcrb::testing

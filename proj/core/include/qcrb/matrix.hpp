#pragma once

#include <complex>
#include <Eigen/Dense>

#include "qcrb/errors.hpp"
#include "qcrb/policy.hpp"

namespace qcrb {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

/// Max-entry deviation from Hermiticity, max_{jk} |A_jk - conj(A_kj)|.
double hermiticity_defect(const CMatrix& a);

bool is_hermitian(const CMatrix& a, double tol = default_policy().hermitian_tol);

/// True iff `a` is Hermitian within `tol` and its minimum eigenvalue is
/// >= -tol. Throws InvalidOperator for non-square or non-Hermitian input.
bool is_psd(const CMatrix& a, double tol = default_policy().structural_tol);

/// Kronecker product. Dimensions multiply; tensor(a, I_1) == a.
CMatrix tensor(const CMatrix& a, const CMatrix& b);

struct EigResult {
    RVector eigenvalues;  // ascending
    CMatrix eigenvectors; // columns, orthonormal
};

/// Eigendecomposition of a Hermitian matrix. Input must be Hermitian within
/// the policy Hermitian tolerance, else InvalidOperator.
EigResult eig_herm(const CMatrix& a);

/// tr(a * b) without forming the product. Requires a: m x n, b: n x m.
Complex trace_product(const CMatrix& a, const CMatrix& b);

/// Solves (L rho + rho L)/2 = x for Hermitian L in the eigenbasis of rho:
/// L_jk = 2 x_jk / (lambda_j + lambda_k). Pairs with lambda_j + lambda_k
/// below the support floor require |x_jk| <= rhs_floor (then L_jk = 0),
/// otherwise SingularSupport is thrown.
CMatrix lyapunov_solve(const CMatrix& rho, const CMatrix& x);

// Fixed 2x2 operators used by the built-in models and tests.
CMatrix identity(int dim);
CMatrix pauli_x();
CMatrix pauli_y();
CMatrix pauli_z();

/// (Re tr(A B)) for Hermitian A, B; the imaginary part is discarded.
inline double real_trace_product(const CMatrix& a, const CMatrix& b) {
    return trace_product(a, b).real();
}

} // namespace qcrb

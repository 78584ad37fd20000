#include "qcrb/matrix.hpp"

#include <limits>
#include <sstream>

namespace qcrb {

double hermiticity_defect(const CMatrix& a) {
    if (a.rows() != a.cols()) {
        return std::numeric_limits<double>::infinity();
    }
    return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

bool is_hermitian(const CMatrix& a, double tol) {
    return a.rows() == a.cols() && hermiticity_defect(a) <= tol;
}

bool is_psd(const CMatrix& a, double tol) {
    if (a.rows() != a.cols()) {
        throw InvalidOperator("is_psd requires a square matrix");
    }
    double defect = hermiticity_defect(a);
    if (defect > tol) {
        std::ostringstream msg;
        msg << "is_psd requires a Hermitian matrix (defect " << defect << ")";
        throw InvalidOperator(msg.str());
    }
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(a, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff() >= -tol;
}

CMatrix tensor(const CMatrix& a, const CMatrix& b) {
    CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

EigResult eig_herm(const CMatrix& a) {
    if (a.rows() != a.cols()) {
        throw InvalidOperator("eig_herm requires a square matrix");
    }
    double defect = hermiticity_defect(a);
    if (defect > default_policy().hermitian_tol) {
        std::ostringstream msg;
        msg << "eig_herm requires a Hermitian matrix (defect " << defect << ")";
        throw InvalidOperator(msg.str());
    }
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(a);
    return EigResult{solver.eigenvalues(), solver.eigenvectors()};
}

Complex trace_product(const CMatrix& a, const CMatrix& b) {
    if (a.cols() != b.rows() || a.rows() != b.cols()) {
        std::ostringstream msg;
        msg << "trace_product dimension mismatch: " << a.rows() << "x" << a.cols()
            << " vs " << b.rows() << "x" << b.cols();
        throw DimensionError(msg.str());
    }
    Complex sum(0.0, 0.0);
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index k = 0; k < a.cols(); ++k) {
            sum += a(i, k) * b(k, i);
        }
    }
    return sum;
}

CMatrix lyapunov_solve(const CMatrix& rho, const CMatrix& x) {
    const auto& pol = default_policy();
    if (rho.rows() != x.rows() || rho.cols() != x.cols()) {
        throw DimensionError("lyapunov_solve requires matching dimensions");
    }
    EigResult eig = eig_herm(rho);
    const CMatrix& v = eig.eigenvectors;
    CMatrix x_eig = v.adjoint() * x * v;
    CMatrix l_eig = CMatrix::Zero(rho.rows(), rho.cols());
    for (Eigen::Index j = 0; j < rho.rows(); ++j) {
        for (Eigen::Index k = 0; k < rho.cols(); ++k) {
            double denom = eig.eigenvalues(j) + eig.eigenvalues(k);
            if (denom <= pol.support_floor) {
                if (std::abs(x_eig(j, k)) > pol.rhs_floor) {
                    std::ostringstream msg;
                    msg << "right-hand side acts outside the support of rho "
                        << "(|x_jk| = " << std::abs(x_eig(j, k))
                        << " with eigenvalue sum " << denom << ")";
                    throw SingularSupport(msg.str());
                }
                l_eig(j, k) = Complex(0.0, 0.0);
            } else {
                l_eig(j, k) = 2.0 * x_eig(j, k) / denom;
            }
        }
    }
    CMatrix l = v * l_eig * v.adjoint();
    // Symmetrize away rounding noise; L is Hermitian for Hermitian inputs.
    return 0.5 * (l + l.adjoint().eval());
}

CMatrix identity(int dim) { return CMatrix::Identity(dim, dim); }

CMatrix pauli_x() {
    CMatrix m(2, 2);
    m << Complex(0, 0), Complex(1, 0), Complex(1, 0), Complex(0, 0);
    return m;
}

CMatrix pauli_y() {
    CMatrix m(2, 2);
    m << Complex(0, 0), Complex(0, -1), Complex(0, 1), Complex(0, 0);
    return m;
}

CMatrix pauli_z() {
    CMatrix m(2, 2);
    m << Complex(1, 0), Complex(0, 0), Complex(0, 0), Complex(-1, 0);
    return m;
}

} // namespace qcrb

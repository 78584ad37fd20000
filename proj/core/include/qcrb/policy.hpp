#pragma once

#include <cstdint>

namespace qcrb {

/// Central numeric policy. Every tolerance used by the library lives here so
/// that test expectations and result artifacts reference a single record.
struct NumericPolicy {
    // Structural validation (Hermiticity, positivity, completeness).
    double hermitian_tol = 1e-12;
    double structural_tol = 1e-10;
    // Linear-algebra solves (eigendecomposition residuals, Lyapunov solve).
    double solver_tol = 1e-9;
    // Lyapunov solve: eigenvalue pairs with sum below this are treated as
    // off-support; the right-hand side must vanish there within rhs_floor.
    double support_floor = 1e-12;
    double rhs_floor = 1e-10;
    // Fisher information: outcomes with probability below q_floor are skipped
    // when the probability derivative also vanishes (below dq_floor).
    double q_floor = 1e-12;
    double dq_floor = 1e-9;
    // Model registration: analytic derivatives vs central finite differences.
    double deriv_fd_step = 1e-4;
    double deriv_fd_tol = 1e-6;
    // Objective guards in the bound solver.
    double fisher_cond_cap = 1e10;
    double sld_cond_cap = 1e8;
    // Capacity caps for tensor powers and outcome-history enumeration.
    int dim_cap = 64;
    long history_cap = 1000000;
};

/// The policy used by default throughout the library.
inline const NumericPolicy& default_policy() {
    static const NumericPolicy policy{};
    return policy;
}

inline constexpr const char* kToolName = "qcrb";
inline constexpr const char* kToolVersion = "0.1.0";

} // namespace qcrb

#pragma once

#include <functional>

#include "qcrb/matrix.hpp"

namespace qcrb {

struct SimplexOptions {
    long max_evals = 4000;
    /// Terminate when (f_worst - f_best) <= ftol_rel * (|f_best| + |f_worst|)/2.
    /// The test is scale covariant: scaling the objective by c > 0 leaves the
    /// search trajectory unchanged.
    double ftol_rel = 1e-12;
    double init_step = 0.25;
};

struct SimplexResult {
    RVector x;
    double value = 0.0;
    long evaluations = 0;
    bool converged = false;
};

/// Nelder-Mead downhill simplex with dimension-adaptive coefficients.
/// Deterministic: the trajectory is a pure function of (f, x0, options).
SimplexResult nelder_mead(const std::function<double(const RVector&)>& f, const RVector& x0,
                          const SimplexOptions& options = {});

} // namespace qcrb

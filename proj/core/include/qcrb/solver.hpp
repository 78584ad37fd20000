#pragma once

#include <optional>
#include <vector>

#include "qcrb/fisher.hpp"
#include "qcrb/model.hpp"

namespace qcrb {

struct SolverOptions {
    /// POVM outcome count L. 0 selects the lower envelope over
    /// {max(m+1, d), 2d, d^2}. Explicit values must satisfy L >= m+1.
    int outcomes = 0;
    int restarts = 8;
    long max_evals = 6000;  // simplex budget per start
    std::uint64_t seed = 0x5eedu;
    /// Finite objective value substituted when the Fisher matrix is singular
    /// in a direction weighted by G, keeping the search well defined.
    double penalty = 1e6;
    /// Measurement-selection slack target reported alongside the bound.
    double eps_prime = 1e-3;
    /// Optional warm start: raw parameter vector from a previous solve at a
    /// nearby point (length 2*L*d). Appended to the start list when usable.
    std::optional<std::vector<double>> warm_start;
};

struct BoundResult {
    double value = 0.0;
    Povm argmin_povm;
    int restarts_used = 0;
    long evaluations = 0;
    bool converged = false;
    /// Best-minus-second-best over the winning outcome count's starts.
    double gap_estimate = 0.0;
    /// Raw parameterization of argmin_povm (length 2*L*d); usable as a
    /// warm start for solves at nearby parameter points.
    std::vector<double> argmin_parameters;
    int outcomes_used = 0;
};

/// tr(G J^{-1}) restricted to the support of J when J is well conditioned
/// there; `penalty` when G weights a direction in which J is singular.
double weighted_inverse_objective(const RMatrix& j, const WeightMatrix& g, double penalty);

/// Minimizes tr(G (J^M_theta)^{-1}) over POVMs of the model at theta by
/// multi-restart simplex search over a rank-one POVM parameterization:
/// L vectors w_k in C^d give A_k = w_k w_k^dagger, S = sum A_k,
/// E_k = S^{-1/2} A_k S^{-1/2} (completeness is structural). Deterministic
/// for fixed options including the seed.
BoundResult cr_bound(const StateModel& model, const RVector& theta, const WeightMatrix& g,
                     const SolverOptions& options = {});

/// The same bound for the n-copy i.i.d. family (value not multiplied by n).
/// The start list additionally contains the tensor product of a single-copy
/// solution, so the n-copy result never regresses past product strategies.
BoundResult cr_bound_n(const StateModel& model, const RVector& theta, const WeightMatrix& g,
                       int n, const SolverOptions& options = {});

struct BoundSequence {
    struct Entry {
        int n = 1;
        double scaled_value = 0.0;  // n * C^n
        BoundResult result;
    };
    std::vector<Entry> entries;
    /// Running minimum of n * C^n; an upper bound for the n -> infinity
    /// limit, not its value.
    double liminf_upper_bound = 0.0;
};

/// Computes {n * C^n : n = 1..n_max} and its running minimum.
BoundSequence quantum_cr_bound(const StateModel& model, const RVector& theta,
                               const WeightMatrix& g, int n_max,
                               const SolverOptions& options = {});

} // namespace qcrb

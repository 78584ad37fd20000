#pragma once

#include <optional>

#include "qcrb/sampling.hpp"
#include "qcrb/solver.hpp"

namespace qcrb {

/// Two-stage measurement plan: a preliminary measurement m0 plus a selector
/// mapping a preliminary estimate to the measurement used on the remaining
/// samples. The selector must be a pure, thread-safe function of its
/// argument (solver-backed selectors cache by quantized argument).
struct AdaptiveStrategy {
    Povm m0;
    std::function<Povm(const RVector&)> selector;
    double eps_prime = 1e-3;
};

/// Builds a strategy whose selector minimizes tr(G J^{-1}) at the requested
/// point via cr_bound, warm-started from `anchor` (a solve at a reference
/// point, typically the study's true parameter). Selector results are cached
/// on a grid of pitch `pitch` per coordinate; cache entries are pure
/// functions of the quantized point, so concurrent duplicate solves agree.
AdaptiveStrategy solver_backed_strategy(const StateModel& model, const WeightMatrix& g,
                                        Povm m0, const BoundResult& anchor,
                                        SolverOptions selector_options, double pitch = 1e-3,
                                        double eps_prime = 1e-3);

struct TrialResult {
    RVector theta_hat;    // second-stage maximum-likelihood estimate
    RVector theta_check;  // preliminary estimate
    long n = 0;
    long n1 = 0;  // first-stage sample count, floor(sqrt(n))
    std::uint64_t master_seed = 0;
    std::uint64_t stream_id = 0;
};

/// One two-stage run: floor(sqrt(n)) samples under m0 give the preliminary
/// estimate; the selector's measurement is applied to the remaining samples
/// and theta_hat maximizes the second-stage likelihood only.
TrialResult two_stage_trial(const StateModel& model, const RVector& theta_star,
                            const AdaptiveStrategy& strategy, long n, RngStream& rng);

struct MseReport {
    long n = 0;
    long trials = 0;
    long failed_trials = 0;
    RMatrix mse;             // empirical mean-square-error matrix
    double trace_mse = 0.0;  // tr(G V)
    double mc_stderr = 0.0;  // standard error of trace_mse
    double scaled_value = 0.0;  // n * tr(G V)
    double c_bound = 0.0;
    double sld_bound = 0.0;
    std::optional<double> n_cn_bound;
};

struct StudyReferences {
    double c_bound = 0.0;
    double sld_bound = 0.0;
    std::optional<double> n_cn_bound;
};

/// Monte Carlo sweep of two_stage_trial over a grid of sample sizes.
/// Trials use independent streams keyed by (grid index, trial index);
/// aggregation is compensated and fixed-order, so results are identical for
/// any worker count. Individual trial failures are recorded and excluded;
/// the run aborts if more than 1% of a grid point's trials fail.
std::vector<MseReport> mse_study(const StateModel& model, const RVector& theta_star,
                                 const AdaptiveStrategy& strategy,
                                 const std::vector<long>& n_grid, long trials,
                                 std::uint64_t master_seed, const WeightMatrix& g,
                                 const StudyReferences& refs, int workers = 0);

/// Collective variant: groups of n1 samples are treated as single samples of
/// the n1-fold tensor-power family and the two-stage scheme runs over n2
/// such blocks. Reports use total sample count n1*n2 and reference
/// n1 * C^{n1}. n1 = 1 reduces to mse_study.
std::vector<MseReport> block_collective_study(const StateModel& model, const RVector& theta_star,
                                              const WeightMatrix& g, int n1,
                                              const std::vector<long>& n2_grid, long trials,
                                              std::uint64_t master_seed,
                                              const SolverOptions& reference_options,
                                              const SolverOptions& selector_options,
                                              double pitch = 1e-3, int workers = 0);

struct RegularityReport {
    struct ConsistencyPoint {
        double delta = 0.0;
        double prob_exceed = 0.0;  // empirical P(|theta_check - theta*| > delta)
    };
    struct ConditionalMseBin {
        double lo = 0.0;
        double hi = 0.0;
        long count = 0;
        double scaled_mse = 0.0;  // (n - n1) * tr(G V) conditional on the bin
    };
    struct ContinuityPoint {
        RVector theta_prime;
        double objective = 0.0;  // tr(G (J^{M_theta'}(theta*))^{-1})
    };

    long n = 0;
    long trials = 0;
    long failed_trials = 0;
    std::vector<ConsistencyPoint> consistency;
    std::vector<ConditionalMseBin> conditional_mse;
    std::vector<ContinuityPoint> continuity;
};

/// Empirical surrogates for the regularity of a strategy at theta*: the
/// preliminary-estimate concentration over a delta grid, the second-stage
/// conditional scaled MSE binned by preliminary error, and a continuity
/// probe of theta' -> tr(G (J^{M_theta'}(theta*))^{-1}).
RegularityReport regularity_diagnostics(const StateModel& model, const RVector& theta_star,
                                        const AdaptiveStrategy& strategy, long n, long trials,
                                        std::uint64_t master_seed, const WeightMatrix& g,
                                        int workers = 0);

/// Unrolls a two-stage strategy into a per-step measurement plan for a run
/// of n samples: the first floor(sqrt(n)) steps measure m0, every later
/// step measures the selector's choice at the preliminary estimate computed
/// from the first-stage history prefix.
SequentialStrategy sequentialize(const AdaptiveStrategy& strategy, const StateModel& model,
                                 int n);

/// Chain-identity check applied directly to a two-stage strategy.
ChainFisherResult adaptive_chain_fisher(const AdaptiveStrategy& strategy,
                                        const StateModel& model, const RVector& theta, int n,
                                        long history_cap = default_policy().history_cap);

} // namespace qcrb

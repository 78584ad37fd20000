#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "qcrb/model.hpp"

namespace qcrb {

/// Counter-based splittable random stream. A stream is identified by
/// (master seed, stream id); identical ids reproduce identical sequences and
/// distinct ids are decorrelated by the splitmix finalizer. Doubles are
/// produced from the high 53 bits so sequences are platform independent.
class RngStream {
  public:
    RngStream(std::uint64_t master_seed, std::uint64_t stream_id);

    std::uint64_t master_seed() const { return master_seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    std::uint64_t next_u64();
    /// Uniform double in [0, 1).
    double next_double();
    /// Uniform double in [lo, hi).
    double next_uniform(double lo, double hi);
    /// Standard normal via Box-Muller (two uniforms per pair, cached).
    double next_normal();

  private:
    std::uint64_t master_seed_;
    std::uint64_t stream_id_;
    std::uint64_t state_;
    std::optional<double> cached_normal_;
};

struct Sample {
    int outcome = 0;  // index into the generating POVM's outcome list
    int step = 0;

    const std::string& label(const Povm& p) const { return p[outcome].label; }
};

/// i.i.d. draws from outcome_distribution(model.state(theta), p) by
/// inverse-CDF over the fixed outcome order.
std::vector<Sample> sample_outcomes(const StateModel& model, const RVector& theta,
                                    const Povm& p, long count, RngStream& rng);

struct MleOptions {
    int starts = 8;           // first start at `center` (or the box center), rest random
    long max_evals = 2000;    // per start
    double ftol_rel = 1e-12;
    std::uint64_t start_seed = 0x51a7e5eed5ull;
    std::optional<RVector> center;
};

/// Maximum-likelihood estimate over the parameter box: maximizes
/// sum_k log q_{outcome(k)}(theta) by multi-start simplex search, clipping
/// into the box. Ties within 1e-9 of the best objective break toward the
/// lexicographically smallest estimate.
RVector mle(const StateModel& model, const Povm& p, const std::vector<Sample>& samples,
            const ParameterDomain& domain, const MleOptions& options = {});

/// First-stage estimate under the preliminary measurement m0 (an MLE).
RVector preliminary_estimate(const StateModel& model, const Povm& m0,
                             const std::vector<Sample>& samples, const ParameterDomain& domain,
                             const MleOptions& options = {});

struct UnbiasednessDiagnostics {
    RVector bias;       // mean(theta_hat at center) - center
    RVector bias_se;    // Monte Carlo standard errors
    RMatrix jacobian;   // column j: central difference of mean(theta_hat) along e_j
    RMatrix jacobian_se;
    long trials_per_design = 0;
};

/// Finite-difference estimate of the estimator's bias and mean-response
/// Jacobian from trials run at theta and theta +- h e_j. `trials` holds
/// (theta_hat, true theta) pairs; the 2m+1 distinct design points must form
/// the central-difference stencil with step h, else DesignError.
UnbiasednessDiagnostics asymptotic_unbiasedness_diag(
    const std::vector<std::pair<RVector, RVector>>& trials, double h);

} // namespace qcrb

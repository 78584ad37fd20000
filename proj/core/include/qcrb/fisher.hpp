#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "qcrb/model.hpp"

namespace qcrb {

struct FisherMatrix {
    enum class Source { PovmInduced, Sld };

    RMatrix matrix;
    RVector theta;
    Source source = Source::PovmInduced;

    int dim() const { return static_cast<int>(matrix.rows()); }
};

/// Estimator values per outcome label, theta_hat(omega) in R^m.
using EstimatorMap = std::map<std::string, RVector>;

/// Classical Fisher information of the outcome distribution induced by `p`
/// on the model at `theta`:
///   J_ij = sum_k (d_i q_k)(d_j q_k) / q_k,   d_i q_k = tr(d_i rho E_k).
/// Outcomes with q_k <= q_floor are skipped when all |d_i q_k| <= dq_floor;
/// otherwise SupportBoundary is thrown (the information diverges there).
FisherMatrix classical_fisher(const StateModel& model, const Povm& p, const RVector& theta);

/// Quantum Fisher information from symmetric logarithmic derivatives:
/// L_i solves (L_i rho + rho L_i)/2 = d_i rho, J_ij = Re tr(rho L_i L_j).
FisherMatrix sld_fisher(const StateModel& model, const RVector& theta);

struct UnbiasednessReport {
    bool ok = false;
    double max_value_defect = 0.0;       // |sum_k est(k) q_k - theta|
    double max_sensitivity_defect = 0.0; // |sum_k est(k) d_l q_k - delta|
};

/// Checks local unbiasedness of (est, p) at theta: the estimator mean equals
/// theta and its sensitivity matrix equals the identity, both within tol.
UnbiasednessReport check_local_unbiasedness(const StateModel& model, const Povm& p,
                                            const EstimatorMap& est, const RVector& theta,
                                            double tol);

/// A measurement plan over a finite run: step k's POVM may depend on the
/// labels observed at steps 0..k-1. `next(0, {})` must equal `first`.
struct SequentialStrategy {
    Povm first;
    std::function<Povm(int step, const std::vector<std::string>& history)> next;

    Povm at(int step, const std::vector<std::string>& history) const {
        return step == 0 ? first : next(step, history);
    }

    static SequentialStrategy fixed(const Povm& p) {
        return SequentialStrategy{p, [p](int, const std::vector<std::string>&) { return p; }};
    }
};

struct ChainFisherResult {
    FisherMatrix per_sample;       // (1/n) x Fisher of the composed n-sample POVM
    FisherMatrix history_average;  // Fisher of the per-step averaged single-sample POVM
    long histories = 0;
};

/// Brute-force check of the sequential Fisher chain identity: the left side
/// composes the strategy into one POVM on the n-fold space and divides its
/// Fisher by n; the right side builds the single-sample POVM whose outcomes
/// are (step, history, outcome) with elements weighted by 1/n times the
/// probability of the history at `theta` (the selection weights are data of
/// the frozen strategy, not differentiated). The two sides agree exactly.
ChainFisherResult adaptive_chain_fisher(const SequentialStrategy& strategy,
                                        const StateModel& model, const RVector& theta, int n,
                                        long history_cap = default_policy().history_cap);

/// PSD-order comparison helper: min eigenvalue of (b - a); a <= b within
/// `slack` iff the returned value >= -slack.
double psd_order_margin(const RMatrix& a, const RMatrix& b);

} // namespace qcrb

#include "qcrb/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "qcrb/simplex.hpp"

namespace qcrb {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

} // namespace

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
    : master_seed_(master_seed), stream_id_(stream_id) {
    // Mix seed and stream id through two finalizer rounds so that nearby
    // (seed, id) pairs land in unrelated states.
    std::uint64_t s = master_seed;
    std::uint64_t a = splitmix64(s);
    s = a ^ (stream_id * 0xda942042e4dd58b5ull + 0x2545f4914f6cdd1dull);
    splitmix64(s);
    state_ = s;
}

std::uint64_t RngStream::next_u64() { return splitmix64(state_); }

double RngStream::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::next_uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
}

double RngStream::next_normal() {
    if (cached_normal_) {
        double v = *cached_normal_;
        cached_normal_.reset();
        return v;
    }
    double u1 = 0.0;
    do {
        u1 = next_double();
    } while (u1 <= 0.0);
    double u2 = next_double();
    double r = std::sqrt(-2.0 * std::log(u1));
    double angle = 2.0 * std::numbers::pi * u2;
    cached_normal_ = r * std::sin(angle);
    return r * std::cos(angle);
}

std::vector<Sample> sample_outcomes(const StateModel& model, const RVector& theta,
                                    const Povm& p, long count, RngStream& rng) {
    RVector q = outcome_distribution(model.state(theta), p);
    RVector cdf(q.size());
    double acc = 0.0;
    for (Eigen::Index k = 0; k < q.size(); ++k) {
        acc += q(k);
        cdf(k) = acc;
    }
    cdf(q.size() - 1) = 1.0;

    std::vector<Sample> samples;
    samples.reserve(static_cast<size_t>(std::max<long>(count, 0)));
    for (long i = 0; i < count; ++i) {
        double u = rng.next_double();
        int outcome = 0;
        while (outcome + 1 < q.size() && u >= cdf(outcome)) ++outcome;
        samples.push_back(Sample{outcome, static_cast<int>(i)});
    }
    return samples;
}

namespace {

/// Negative log-likelihood from outcome counts; +big where an observed
/// outcome has zero probability.
class NegLogLikelihood {
  public:
    NegLogLikelihood(const StateModel& model, const Povm& p, std::vector<long> counts)
        : model_(model), povm_(p), counts_(std::move(counts)) {}

    static constexpr double kInfeasible = 1e30;

    double operator()(const RVector& theta) const {
        CMatrix rho = model_.state(theta);
        double nll = 0.0;
        for (size_t k = 0; k < counts_.size(); ++k) {
            if (counts_[k] == 0) continue;
            double q = trace_product(rho, povm_[static_cast<int>(k)].op).real();
            if (q <= 0.0) {
                return kInfeasible;
            }
            nll -= static_cast<double>(counts_[k]) * std::log(q);
        }
        return nll;
    }

  private:
    const StateModel& model_;
    const Povm& povm_;
    std::vector<long> counts_;
};

} // namespace

RVector mle(const StateModel& model, const Povm& p, const std::vector<Sample>& samples,
            const ParameterDomain& domain, const MleOptions& options) {
    if (samples.empty()) {
        throw NoData("mle requires at least one sample");
    }
    std::vector<long> counts(static_cast<size_t>(p.size()), 0);
    for (const Sample& s : samples) {
        if (s.outcome < 0 || s.outcome >= p.size()) {
            throw DimensionError("sample outcome index outside the POVM");
        }
        ++counts[static_cast<size_t>(s.outcome)];
    }
    NegLogLikelihood nll(model, p, std::move(counts));
    const int m = domain.dim();

    // Box handling: evaluate at the clipped point plus a quadratic pullback.
    auto objective = [&](const RVector& theta) {
        RVector clipped = domain.clip(theta);
        double outside = (theta - clipped).squaredNorm();
        double value = nll(clipped);
        if (value >= NegLogLikelihood::kInfeasible) return value;
        return value + 1e3 * static_cast<double>(samples.size()) * outside;
    };

    RngStream start_rng(options.start_seed, 0);
    double best_value = std::numeric_limits<double>::infinity();
    std::vector<std::pair<double, RVector>> finishers;
    for (int s = 0; s < options.starts; ++s) {
        RVector x0(m);
        if (s == 0) {
            x0 = options.center ? domain.clip(*options.center) : domain.center();
        } else {
            for (int i = 0; i < m; ++i) x0(i) = start_rng.next_uniform(domain.lower()(i), domain.upper()(i));
        }
        SimplexOptions sopt;
        sopt.max_evals = options.max_evals;
        sopt.ftol_rel = options.ftol_rel;
        sopt.init_step = 0.15;
        SimplexResult res = nelder_mead(objective, x0, sopt);
        // Polish pass with a tight simplex for closed-form-grade accuracy.
        sopt.init_step = 0.005;
        SimplexResult polished = nelder_mead(objective, res.x, sopt);
        if (polished.value < res.value) res = polished;
        RVector x = domain.clip(res.x);
        double value = nll(x);
        finishers.emplace_back(value, x);
        best_value = std::min(best_value, value);
    }

    if (best_value >= NegLogLikelihood::kInfeasible) {
        throw InfeasibleLikelihood("every observed outcome has zero probability over the domain");
    }

    // Flat likelihoods carry no information; a coarse probe distinguishes a
    // genuinely constant objective from a merely converged one. An
    // infeasible probe point means the likelihood varies, so only fully
    // feasible probe sets can be flat.
    {
        double probe_min = best_value, probe_max = best_value;
        bool all_feasible = true;
        std::vector<RVector> probes{domain.center()};
        for (int corner = 0; corner < (1 << std::min(m, 3)); ++corner) {
            RVector probe = domain.lower();
            for (int i = 0; i < std::min(m, 3); ++i) {
                probe(i) = (corner >> i) & 1 ? domain.upper()(i) : domain.lower()(i);
            }
            probes.push_back(probe);
        }
        for (const RVector& probe : probes) {
            double v = nll(domain.clip(probe));
            if (v >= NegLogLikelihood::kInfeasible) {
                all_feasible = false;
                break;
            }
            probe_min = std::min(probe_min, v);
            probe_max = std::max(probe_max, v);
        }
        if (all_feasible && probe_max - probe_min <= 1e-12) {
            throw InfeasibleLikelihood("likelihood is flat over the domain; "
                                       "the measurement carries no information");
        }
    }

    RVector best = finishers.front().second;
    bool found = false;
    for (const auto& [value, x] : finishers) {
        if (value > best_value + 1e-9) continue;
        if (!found || std::lexicographical_compare(x.data(), x.data() + x.size(),
                                                   best.data(), best.data() + best.size())) {
            best = x;
            found = true;
        }
    }
    return best;
}

RVector preliminary_estimate(const StateModel& model, const Povm& m0,
                             const std::vector<Sample>& samples, const ParameterDomain& domain,
                             const MleOptions& options) {
    return mle(model, m0, samples, domain, options);
}

UnbiasednessDiagnostics asymptotic_unbiasedness_diag(
    const std::vector<std::pair<RVector, RVector>>& trials, double h) {
    if (trials.empty()) {
        throw NoData("no trials supplied");
    }
    const int m = static_cast<int>(trials.front().second.size());

    struct Group {
        RVector sum;
        RVector sumsq;
        long count = 0;
    };
    std::vector<std::pair<RVector, Group>> groups;
    auto find_group = [&](const RVector& theta) -> Group& {
        for (auto& [key, g] : groups) {
            if ((key - theta).cwiseAbs().maxCoeff() <= 1e-12) return g;
        }
        groups.push_back({theta, Group{RVector::Zero(m), RVector::Zero(m), 0}});
        return groups.back().second;
    };
    for (const auto& [est, truth] : trials) {
        if (est.size() != m || truth.size() != m) {
            throw DesignError("trial vectors have inconsistent dimension");
        }
        Group& g = find_group(truth);
        g.sum += est;
        g.sumsq += est.cwiseProduct(est);
        g.count += 1;
    }
    if (groups.size() != static_cast<size_t>(2 * m + 1)) {
        std::ostringstream msg;
        msg << "expected " << 2 * m + 1 << " design points, found " << groups.size();
        throw DesignError(msg.str());
    }

    // The center is the point whose +-h e_j neighbours are all present.
    auto locate = [&](const RVector& theta) -> const Group* {
        for (const auto& [key, g] : groups) {
            if ((key - theta).cwiseAbs().maxCoeff() <= 1e-9 * std::max(1.0, h)) return &g;
        }
        return nullptr;
    };
    const RVector* center_key = nullptr;
    const Group* center = nullptr;
    for (const auto& [key, g] : groups) {
        bool ok = true;
        for (int j = 0; j < m && ok; ++j) {
            RVector plus = key, minus = key;
            plus(j) += h;
            minus(j) -= h;
            ok = locate(plus) != nullptr && locate(minus) != nullptr;
        }
        if (ok) {
            center_key = &key;
            center = &g;
            break;
        }
    }
    if (center == nullptr) {
        throw DesignError("trials do not form a central-difference stencil");
    }

    auto group_mean = [](const Group& g) { return (g.sum / static_cast<double>(g.count)).eval(); };
    auto group_se = [](const Group& g) {
        RVector mean = g.sum / static_cast<double>(g.count);
        RVector var = g.sumsq / static_cast<double>(g.count) - mean.cwiseProduct(mean);
        return (var.cwiseMax(0.0) / static_cast<double>(g.count)).cwiseSqrt().eval();
    };

    UnbiasednessDiagnostics diag;
    diag.trials_per_design = center->count;
    diag.bias = group_mean(*center) - *center_key;
    diag.bias_se = group_se(*center);
    diag.jacobian = RMatrix::Zero(m, m);
    diag.jacobian_se = RMatrix::Zero(m, m);
    for (int j = 0; j < m; ++j) {
        RVector plus_key = *center_key, minus_key = *center_key;
        plus_key(j) += h;
        minus_key(j) -= h;
        const Group* plus = locate(plus_key);
        const Group* minus = locate(minus_key);
        diag.jacobian.col(j) = (group_mean(*plus) - group_mean(*minus)) / (2.0 * h);
        RVector se_p = group_se(*plus), se_m = group_se(*minus);
        diag.jacobian_se.col(j) =
            (se_p.cwiseProduct(se_p) + se_m.cwiseProduct(se_m)).cwiseSqrt() / (2.0 * h);
    }
    return diag;
}

} // namespace qcrb

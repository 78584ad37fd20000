#include "qcrb/adaptive.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include "qcrb/parallel.hpp"
#include "qcrb/registry.hpp"

namespace qcrb {

int resolve_worker_count(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("QCRB_WORKERS")) {
        int value = std::atoi(env);
        if (value > 0) return value;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(long count, int workers, const std::function<void(long)>& fn) {
    workers = resolve_worker_count(workers);
    if (workers <= 1 || count <= 1) {
        for (long i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<long> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto body = [&]() {
        while (true) {
            long i = next.fetch_add(1);
            if (i >= count) break;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    int spawn = static_cast<int>(std::min<long>(workers, count));
    pool.reserve(static_cast<size_t>(spawn));
    for (int w = 0; w < spawn; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

namespace {

std::vector<long long> quantize(const RVector& theta, double pitch) {
    std::vector<long long> key(static_cast<size_t>(theta.size()));
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
        key[static_cast<size_t>(i)] = llround(theta(i) / pitch);
    }
    return key;
}

struct SelectorCache {
    std::mutex mutex;
    std::map<std::vector<long long>, Povm> entries;
};

} // namespace

AdaptiveStrategy solver_backed_strategy(const StateModel& model, const WeightMatrix& g,
                                        Povm m0, const BoundResult& anchor,
                                        SolverOptions selector_options, double pitch,
                                        double eps_prime) {
    // Force the anchor's outcome count so its parameterization is reusable.
    selector_options.outcomes = anchor.outcomes_used;
    selector_options.warm_start = anchor.argmin_parameters;

    auto cache = std::make_shared<SelectorCache>();
    StateModel model_copy = model;
    WeightMatrix g_copy = g;
    auto selector = [model_copy, g_copy, selector_options, pitch,
                     cache](const RVector& theta_prime) -> Povm {
        std::vector<long long> key = quantize(theta_prime, pitch);
        {
            std::lock_guard<std::mutex> lock(cache->mutex);
            auto it = cache->entries.find(key);
            if (it != cache->entries.end()) return it->second;
        }
        RVector snapped(theta_prime.size());
        for (Eigen::Index i = 0; i < snapped.size(); ++i) {
            snapped(i) = static_cast<double>(key[static_cast<size_t>(i)]) * pitch;
        }
        snapped = model_copy.domain().clip(snapped);
        BoundResult res = cr_bound(model_copy, snapped, g_copy, selector_options);
        std::lock_guard<std::mutex> lock(cache->mutex);
        // First writer wins; duplicates are identical by solver determinism.
        auto [it, inserted] = cache->entries.try_emplace(key, std::move(res.argmin_povm));
        return it->second;
    };
    return AdaptiveStrategy{std::move(m0), std::move(selector), eps_prime};
}

TrialResult two_stage_trial(const StateModel& model, const RVector& theta_star,
                            const AdaptiveStrategy& strategy, long n, RngStream& rng) {
    if (n < 4) {
        throw TooFewSamples("two-stage trial requires n >= 4");
    }
    if (!model.domain().contains(theta_star)) {
        throw ConfigError("true parameter lies outside the domain");
    }
    long n1 = static_cast<long>(std::floor(std::sqrt(static_cast<double>(n))));
    n1 = std::max<long>(n1, 1);

    std::vector<Sample> stage1 = sample_outcomes(model, theta_star, strategy.m0, n1, rng);
    MleOptions opts1;
    opts1.center = model.domain().center();
    RVector theta_check = preliminary_estimate(model, strategy.m0, stage1, model.domain(), opts1);

    Povm second = strategy.selector(theta_check);
    std::vector<Sample> stage2 = sample_outcomes(model, theta_star, second, n - n1, rng);
    MleOptions opts2;
    opts2.center = theta_check;
    RVector theta_hat = mle(model, second, stage2, model.domain(), opts2);

    TrialResult result;
    result.theta_hat = theta_hat;
    result.theta_check = theta_check;
    result.n = n;
    result.n1 = n1;
    result.master_seed = rng.master_seed();
    result.stream_id = rng.stream_id();
    return result;
}

namespace {

struct TrialSlot {
    std::optional<TrialResult> result;
    std::string error;
};

/// Runs `trials` independent trials at sample count n; slot t uses stream
/// (stream_base + t). Failures are captured per slot.
std::vector<TrialSlot> run_trials(const StateModel& model, const RVector& theta_star,
                                  const AdaptiveStrategy& strategy, long n, long trials,
                                  std::uint64_t master_seed, std::uint64_t stream_base,
                                  int workers) {
    std::vector<TrialSlot> slots(static_cast<size_t>(trials));
    parallel_for(trials, workers, [&](long t) {
        RngStream rng(master_seed, stream_base + static_cast<std::uint64_t>(t));
        try {
            slots[static_cast<size_t>(t)].result =
                two_stage_trial(model, theta_star, strategy, n, rng);
        } catch (const Error& e) {
            slots[static_cast<size_t>(t)].error = e.what();
        }
    });
    return slots;
}

/// Compensated (Kahan) accumulator for fixed-order reductions.
class KahanSum {
  public:
    void add(double value) {
        double y = value - compensation_;
        double t = sum_ + y;
        compensation_ = (t - sum_) - y;
        sum_ = t;
    }
    double value() const { return sum_; }

  private:
    double sum_ = 0.0;
    double compensation_ = 0.0;
};

MseReport aggregate_mse(const std::vector<TrialSlot>& slots, const RVector& theta_star,
                        const WeightMatrix& g, long n_report) {
    const int m = static_cast<int>(theta_star.size());
    MseReport report;
    report.n = n_report;
    report.trials = static_cast<long>(slots.size());

    std::vector<KahanSum> mse_acc(static_cast<size_t>(m) * m);
    KahanSum err_acc, err_sq_acc;
    long used = 0;
    for (const TrialSlot& slot : slots) {
        if (!slot.result) {
            ++report.failed_trials;
            continue;
        }
        RVector d = slot.result->theta_hat - theta_star;
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < m; ++j) {
                mse_acc[static_cast<size_t>(i) * m + j].add(d(i) * d(j));
            }
        }
        double e = d.dot(g.matrix() * d);
        err_acc.add(e);
        err_sq_acc.add(e * e);
        ++used;
    }
    if (report.failed_trials * 100 > report.trials) {
        std::ostringstream msg;
        msg << report.failed_trials << " of " << report.trials << " trials failed";
        throw DegenerateModel(msg.str());
    }
    if (used == 0) {
        throw NoData("all trials failed");
    }
    report.mse = RMatrix(m, m);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            report.mse(i, j) = mse_acc[static_cast<size_t>(i) * m + j].value() / used;
        }
    }
    report.mse = 0.5 * (report.mse + report.mse.transpose().eval());
    double mean = err_acc.value() / used;
    double var = std::max(err_sq_acc.value() / used - mean * mean, 0.0);
    report.trace_mse = mean;
    report.mc_stderr = std::sqrt(var / used);
    return report;
}

} // namespace

std::vector<MseReport> mse_study(const StateModel& model, const RVector& theta_star,
                                 const AdaptiveStrategy& strategy,
                                 const std::vector<long>& n_grid, long trials,
                                 std::uint64_t master_seed, const WeightMatrix& g,
                                 const StudyReferences& refs, int workers) {
    if (trials < 100) {
        throw ConfigError("mse_study requires trials >= 100");
    }
    std::vector<MseReport> reports;
    reports.reserve(n_grid.size());
    for (size_t ni = 0; ni < n_grid.size(); ++ni) {
        long n = n_grid[ni];
        std::uint64_t stream_base = static_cast<std::uint64_t>(ni) * static_cast<std::uint64_t>(trials);
        std::vector<TrialSlot> slots =
            run_trials(model, theta_star, strategy, n, trials, master_seed, stream_base, workers);
        MseReport report = aggregate_mse(slots, theta_star, g, n);
        report.scaled_value = static_cast<double>(n) * report.trace_mse;
        report.c_bound = refs.c_bound;
        report.sld_bound = refs.sld_bound;
        report.n_cn_bound = refs.n_cn_bound;
        reports.push_back(std::move(report));
    }
    return reports;
}

std::vector<MseReport> block_collective_study(const StateModel& model, const RVector& theta_star,
                                              const WeightMatrix& g, int n1,
                                              const std::vector<long>& n2_grid, long trials,
                                              std::uint64_t master_seed,
                                              const SolverOptions& reference_options,
                                              const SolverOptions& selector_options,
                                              double pitch, int workers) {
    if (n1 < 1) {
        throw ConfigError("block_collective_study requires n1 >= 1");
    }
    StateModel block_model = tensor_power_model(model, n1);
    Povm m0_single = default_preliminary_povm(model);
    Povm m0_block =
        n1 == 1 ? m0_single : tensor_povm(std::vector<Povm>(static_cast<size_t>(n1), m0_single));

    BoundResult anchor = cr_bound_n(model, theta_star, g, n1, reference_options);
    AdaptiveStrategy strategy = solver_backed_strategy(block_model, g, std::move(m0_block),
                                                       anchor, selector_options, pitch,
                                                       reference_options.eps_prime);

    StudyReferences refs;
    refs.sld_bound = weighted_inverse_objective(sld_fisher(model, theta_star).matrix, g,
                                                reference_options.penalty);
    refs.n_cn_bound = static_cast<double>(n1) * anchor.value;
    refs.c_bound =
        n1 == 1 ? anchor.value : cr_bound(model, theta_star, g, reference_options).value;

    std::vector<MseReport> reports;
    reports.reserve(n2_grid.size());
    for (size_t ni = 0; ni < n2_grid.size(); ++ni) {
        long n2 = n2_grid[ni];
        std::uint64_t stream_base = static_cast<std::uint64_t>(ni) * static_cast<std::uint64_t>(trials);
        std::vector<TrialSlot> slots = run_trials(block_model, theta_star, strategy, n2, trials,
                                                  master_seed, stream_base, workers);
        MseReport report = aggregate_mse(slots, theta_star, g, n1 * n2);
        report.scaled_value = static_cast<double>(n1) * static_cast<double>(n2) * report.trace_mse;
        report.c_bound = refs.c_bound;
        report.sld_bound = refs.sld_bound;
        report.n_cn_bound = refs.n_cn_bound;
        reports.push_back(std::move(report));
    }
    return reports;
}

SequentialStrategy sequentialize(const AdaptiveStrategy& strategy, const StateModel& model,
                                 int n) {
    if (n < 1) {
        throw ConfigError("sequentialize requires n >= 1");
    }
    int n1 = std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(n)))));
    Povm m0 = strategy.m0;
    auto selector = strategy.selector;
    StateModel model_copy = model;
    auto next = [m0, selector, model_copy, n1](int step,
                                               const std::vector<std::string>& history) {
        if (step < n1) return m0;
        // Selection uses the first-stage prefix only, all measured with m0.
        std::vector<Sample> samples;
        samples.reserve(static_cast<size_t>(n1));
        for (int k = 0; k < n1; ++k) {
            int outcome = -1;
            for (int j = 0; j < m0.size(); ++j) {
                if (m0[j].label == history[static_cast<size_t>(k)]) {
                    outcome = j;
                    break;
                }
            }
            if (outcome < 0) {
                throw DimensionError("history label '" + history[static_cast<size_t>(k)] +
                                     "' does not belong to the first-stage measurement");
            }
            samples.push_back(Sample{outcome, k});
        }
        MleOptions opts;
        opts.center = model_copy.domain().center();
        RVector check;
        try {
            check = preliminary_estimate(model_copy, m0, samples, model_copy.domain(), opts);
        } catch (const InfeasibleLikelihood&) {
            // A flat prefix pins nothing down; the plan must still choose a
            // measurement for that branch.
            check = model_copy.domain().center();
        }
        return selector(check);
    };
    return SequentialStrategy{std::move(m0), std::move(next)};
}

ChainFisherResult adaptive_chain_fisher(const AdaptiveStrategy& strategy,
                                        const StateModel& model, const RVector& theta, int n,
                                        long history_cap) {
    return adaptive_chain_fisher(sequentialize(strategy, model, n), model, theta, n,
                                 history_cap);
}

RegularityReport regularity_diagnostics(const StateModel& model, const RVector& theta_star,
                                        const AdaptiveStrategy& strategy, long n, long trials,
                                        std::uint64_t master_seed, const WeightMatrix& g,
                                        int workers) {
    if (trials < 100) {
        throw ConfigError("regularity_diagnostics requires trials >= 100");
    }
    std::vector<TrialSlot> slots =
        run_trials(model, theta_star, strategy, n, trials, master_seed, 0, workers);

    RegularityReport report;
    report.n = n;
    report.trials = trials;

    double diameter = (model.domain().upper() - model.domain().lower()).norm();
    std::vector<double> deltas{0.05, 0.1, 0.2, 0.4, diameter};
    long n1 = static_cast<long>(std::floor(std::sqrt(static_cast<double>(n))));

    std::vector<double> check_err;
    std::vector<double> hat_weighted;
    for (const TrialSlot& slot : slots) {
        if (!slot.result) {
            ++report.failed_trials;
            continue;
        }
        check_err.push_back((slot.result->theta_check - theta_star).norm());
        RVector d = slot.result->theta_hat - theta_star;
        hat_weighted.push_back(d.dot(g.matrix() * d));
    }
    long used = static_cast<long>(check_err.size());
    if (used == 0) {
        throw NoData("all trials failed");
    }

    for (double delta : deltas) {
        long exceed = 0;
        for (double e : check_err) {
            if (e > delta) ++exceed;
        }
        report.consistency.push_back({delta, static_cast<double>(exceed) / used});
    }

    std::vector<double> edges{0.0, 0.05, 0.1, 0.2, 0.4, diameter + 1.0};
    for (size_t b = 0; b + 1 < edges.size(); ++b) {
        RegularityReport::ConditionalMseBin bin;
        bin.lo = edges[b];
        bin.hi = edges[b + 1];
        KahanSum acc;
        for (size_t t = 0; t < check_err.size(); ++t) {
            if (check_err[t] >= bin.lo && check_err[t] < bin.hi) {
                acc.add(hat_weighted[t]);
                ++bin.count;
            }
        }
        bin.scaled_mse = bin.count > 0
                             ? static_cast<double>(n - n1) * acc.value() / bin.count
                             : 0.0;
        report.conditional_mse.push_back(bin);
    }

    const int m = model.num_params();
    std::vector<double> offsets{-0.2, -0.1, -0.05, 0.0, 0.05, 0.1, 0.2};
    for (int j = 0; j < m; ++j) {
        for (double off : offsets) {
            RVector theta_prime = theta_star;
            theta_prime(j) += off;
            theta_prime = model.domain().clip(theta_prime);
            Povm mp = strategy.selector(theta_prime);
            FisherMatrix fisher = classical_fisher(model, mp, theta_star);
            double objective = weighted_inverse_objective(fisher.matrix, g, 1e6);
            report.continuity.push_back({theta_prime, objective});
        }
    }
    return report;
}

} // namespace qcrb

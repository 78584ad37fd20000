#include "qcrb/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qcrb/sampling.hpp"
#include "qcrb/simplex.hpp"

namespace qcrb {

double weighted_inverse_objective(const RMatrix& j, const WeightMatrix& g, double penalty) {
    if (j.rows() != g.dim() || j.cols() != g.dim()) {
        throw DimensionError("weighted_inverse_objective: dimension mismatch");
    }
    Eigen::SelfAdjointEigenSolver<RMatrix> eig(0.5 * (j + j.transpose().eval()));
    const RVector& lambda = eig.eigenvalues();
    const RMatrix& v = eig.eigenvectors();
    double lambda_max = lambda.maxCoeff();
    double threshold = lambda_max > 0.0 ? lambda_max / default_policy().fisher_cond_cap : 0.0;

    double value = 0.0;
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        double weight = v.col(i).dot(g.matrix() * v.col(i));
        if (lambda(i) <= threshold || lambda_max <= 0.0) {
            if (weight > 1e-12) {
                return penalty;  // G weights a direction where J is singular
            }
        } else {
            value += weight / lambda(i);
        }
    }
    return value;
}

namespace {

/// Objective closure over the rank-one POVM parameterization.
class PovmObjective {
  public:
    PovmObjective(const StateModel& model, const RVector& theta, const WeightMatrix& g,
                  int outcomes, double penalty)
        : g_(g), outcomes_(outcomes), dim_(model.dim()), penalty_(penalty) {
        rho_ = model.state(theta);
        const int m = model.num_params();
        derivs_.reserve(static_cast<size_t>(m));
        for (int i = 0; i < m; ++i) derivs_.push_back(model.deriv(theta, i));
    }

    int parameter_count() const { return 2 * outcomes_ * dim_; }

    /// Decode a parameter vector into POVM elements, or nothing when the
    /// frame operator S is numerically singular.
    std::optional<std::vector<CMatrix>> decode(const RVector& params) const {
        CMatrix s = CMatrix::Zero(dim_, dim_);
        std::vector<CMatrix> raw;
        raw.reserve(static_cast<size_t>(outcomes_));
        for (int k = 0; k < outcomes_; ++k) {
            Eigen::VectorXcd w(dim_);
            for (int i = 0; i < dim_; ++i) {
                w(i) = Complex(params(2 * (k * dim_ + i)), params(2 * (k * dim_ + i) + 1));
            }
            CMatrix a = w * w.adjoint();
            raw.push_back(a);
            s += a;
        }
        Eigen::SelfAdjointEigenSolver<CMatrix> eig(s);
        const RVector& lambda = eig.eigenvalues();
        if (lambda.minCoeff() <= 1e-10 * std::max(lambda.maxCoeff(), 1e-300)) {
            return std::nullopt;
        }
        CMatrix s_inv_sqrt = eig.eigenvectors() *
                             lambda.cwiseSqrt().cwiseInverse().asDiagonal() *
                             eig.eigenvectors().adjoint();
        std::vector<CMatrix> elements;
        elements.reserve(raw.size());
        for (const CMatrix& a : raw) {
            CMatrix e = s_inv_sqrt * a * s_inv_sqrt;
            elements.push_back(0.5 * (e + e.adjoint().eval()));
        }
        return elements;
    }

    double operator()(const RVector& params) const {
        auto elements = decode(params);
        if (!elements) return penalty_;
        const auto& pol = default_policy();
        const int m = static_cast<int>(derivs_.size());
        RMatrix j = RMatrix::Zero(m, m);
        RVector dq(m);
        for (const CMatrix& e : *elements) {
            double q = trace_product(rho_, e).real();
            for (int i = 0; i < m; ++i) dq(i) = trace_product(derivs_[i], e).real();
            if (q <= pol.q_floor) {
                if (dq.cwiseAbs().maxCoeff() > pol.dq_floor) return penalty_;
                continue;
            }
            j.noalias() += (dq * dq.transpose()) / q;
        }
        return weighted_inverse_objective(j, g_, penalty_);
    }

    Povm to_povm(const RVector& params) const {
        auto elements = decode(params);
        if (!elements) {
            throw DegenerateModel("argmin parameters decode to a singular frame");
        }
        Povm p;
        for (size_t k = 0; k < elements->size(); ++k) {
            p.outcomes.push_back({"e" + std::to_string(k), (*elements)[k]});
        }
        return p;
    }

  private:
    CMatrix rho_;
    std::vector<CMatrix> derivs_;
    const WeightMatrix& g_;
    int outcomes_;
    int dim_;
    double penalty_;
};

struct StartOutcome {
    double value = 0.0;
    RVector params;
    bool converged = false;
};

std::vector<int> envelope_outcomes(int m, int d, int requested) {
    if (requested > 0) {
        if (requested < m + 1) {
            throw ConfigError("solver outcome count must be at least m+1");
        }
        return {requested};
    }
    std::vector<int> ls{std::max(m + 1, d), 2 * d, d * d};
    std::sort(ls.begin(), ls.end());
    ls.erase(std::unique(ls.begin(), ls.end()), ls.end());
    return ls;
}

BoundResult solve_bound(const StateModel& model, const RVector& theta, const WeightMatrix& g,
                        const SolverOptions& options,
                        const std::vector<std::vector<double>>& extra_starts) {
    if (!model.domain().contains(theta)) {
        throw ConfigError("evaluation point lies outside the parameter domain");
    }
    if (g.dim() != model.num_params()) {
        throw DimensionError("weight matrix dimension differs from parameter count");
    }
    if (options.restarts < 1) {
        throw ConfigError("solver requires at least one restart");
    }

    // Precondition: the SLD Fisher matrix must be invertible, otherwise no
    // POVM yields finite weighted MSE in every G-weighted direction.
    FisherMatrix sld = sld_fisher(model, theta);
    {
        Eigen::SelfAdjointEigenSolver<RMatrix> eig(sld.matrix, Eigen::EigenvaluesOnly);
        double lo = eig.eigenvalues().minCoeff();
        double hi = eig.eigenvalues().maxCoeff();
        if (lo <= 0.0 || hi / lo > default_policy().sld_cond_cap) {
            std::ostringstream msg;
            msg << "SLD Fisher matrix is singular or ill conditioned (min eigenvalue " << lo
                << ")";
            throw DegenerateModel(msg.str());
        }
    }

    const int d = model.dim();
    const int m = model.num_params();
    std::vector<int> ls = envelope_outcomes(m, d, options.outcomes);

    BoundResult best;
    best.value = std::numeric_limits<double>::infinity();
    long total_evals = 0;
    int total_starts = 0;
    std::vector<double> best_params_smaller_l;

    for (int l : ls) {
        PovmObjective objective(model, theta, g, l, options.penalty);
        const int np = objective.parameter_count();

        std::vector<RVector> starts;
        auto push_params = [&](const std::vector<double>& params) {
            if (params.empty() || static_cast<int>(params.size()) > np) return;
            RVector x = RVector::Zero(np);
            for (size_t i = 0; i < params.size(); ++i) x(static_cast<Eigen::Index>(i)) = params[i];
            starts.push_back(std::move(x));
        };
        // Structured starts: embed the best solution from a smaller outcome
        // count (zero-padded; null outcomes are valid POVM elements), any
        // caller-provided starts, then the seeded random draws.
        push_params(best_params_smaller_l);
        for (const auto& extra : extra_starts) push_params(extra);
        if (options.warm_start) push_params(*options.warm_start);
        for (int r = 0; r < options.restarts; ++r) {
            RngStream rng(options.seed, static_cast<std::uint64_t>(l) * 7919u +
                                            static_cast<std::uint64_t>(r));
            RVector x(np);
            for (int i = 0; i < np; ++i) x(i) = rng.next_normal();
            starts.push_back(std::move(x));
        }

        std::vector<StartOutcome> outcomes;
        outcomes.reserve(starts.size());
        for (const RVector& x0 : starts) {
            SimplexOptions sopt;
            sopt.max_evals = options.max_evals;
            sopt.init_step = 0.25;
            SimplexResult res = nelder_mead(objective, x0, sopt);
            total_evals += res.evaluations;
            outcomes.push_back({res.value, res.x, res.converged});
        }
        total_starts += static_cast<int>(starts.size());

        size_t winner = 0;
        for (size_t i = 1; i < outcomes.size(); ++i) {
            if (outcomes[i].value < outcomes[winner].value) winner = i;
        }
        // Polish the winning start with a tight simplex around it.
        {
            SimplexOptions sopt;
            sopt.max_evals = options.max_evals;
            sopt.init_step = 0.02;
            SimplexResult res = nelder_mead(objective, outcomes[winner].params, sopt);
            total_evals += res.evaluations;
            if (res.value < outcomes[winner].value) {
                outcomes[winner] = {res.value, res.x, res.converged};
            }
        }

        double second = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < outcomes.size(); ++i) {
            if (i != winner) second = std::min(second, outcomes[i].value);
        }

        if (outcomes[winner].value < best.value) {
            best.value = outcomes[winner].value;
            best.converged = outcomes[winner].converged;
            best.gap_estimate = std::isfinite(second) ? second - outcomes[winner].value : 0.0;
            best.outcomes_used = l;
            best.argmin_parameters.assign(outcomes[winner].params.data(),
                                          outcomes[winner].params.data() + np);
            best.argmin_povm = objective.to_povm(outcomes[winner].params);
        }
        best_params_smaller_l.assign(outcomes[winner].params.data(),
                                     outcomes[winner].params.data() + np);
    }

    best.restarts_used = total_starts;
    best.evaluations = total_evals;
    if (!std::isfinite(best.value) || best.value >= options.penalty) {
        throw DegenerateModel("every restart produced a singular Fisher matrix");
    }
    return best;
}

} // namespace

BoundResult cr_bound(const StateModel& model, const RVector& theta, const WeightMatrix& g,
                     const SolverOptions& options) {
    return solve_bound(model, theta, g, options, {});
}

BoundResult cr_bound_n(const StateModel& model, const RVector& theta, const WeightMatrix& g,
                       int n, const SolverOptions& options) {
    if (n < 1) {
        throw ConfigError("cr_bound_n requires n >= 1");
    }
    if (n == 1) {
        return cr_bound(model, theta, g, options);
    }
    StateModel power = tensor_power_model(model, n);

    // Feasible-point start: the n-fold tensor product of a single-copy
    // solution. In the rank-one parameterization the product POVM is the
    // outer product of the single-copy vectors, so the n-copy search starts
    // no worse than 1/n times the single-copy bound.
    SolverOptions single = options;
    single.warm_start.reset();
    BoundResult base = cr_bound(model, theta, g, single);
    const int d = model.dim();
    const int l1 = base.outcomes_used;
    std::vector<Eigen::VectorXcd> ws;
    ws.reserve(static_cast<size_t>(l1));
    for (int k = 0; k < l1; ++k) {
        Eigen::VectorXcd w(d);
        for (int i = 0; i < d; ++i) {
            w(i) = Complex(base.argmin_parameters[static_cast<size_t>(2 * (k * d + i))],
                           base.argmin_parameters[static_cast<size_t>(2 * (k * d + i) + 1)]);
        }
        ws.push_back(std::move(w));
    }
    std::vector<Eigen::VectorXcd> product = ws;
    for (int copy = 1; copy < n; ++copy) {
        std::vector<Eigen::VectorXcd> grown;
        grown.reserve(product.size() * ws.size());
        for (const auto& u : product) {
            for (const auto& w : ws) {
                Eigen::VectorXcd uw(u.size() * w.size());
                for (Eigen::Index a = 0; a < u.size(); ++a) {
                    for (Eigen::Index b = 0; b < w.size(); ++b) {
                        uw(a * w.size() + b) = u(a) * w(b);
                    }
                }
                grown.push_back(std::move(uw));
            }
        }
        product = std::move(grown);
    }
    std::vector<double> product_params;
    product_params.reserve(product.size() * static_cast<size_t>(power.dim()) * 2);
    for (const auto& w : product) {
        for (Eigen::Index i = 0; i < w.size(); ++i) {
            product_params.push_back(w(i).real());
            product_params.push_back(w(i).imag());
        }
    }

    return solve_bound(power, theta, g, options, {product_params});
}

BoundSequence quantum_cr_bound(const StateModel& model, const RVector& theta,
                               const WeightMatrix& g, int n_max, const SolverOptions& options) {
    if (n_max < 1) {
        throw ConfigError("quantum_cr_bound requires n_max >= 1");
    }
    BoundSequence seq;
    double running_min = std::numeric_limits<double>::infinity();
    for (int n = 1; n <= n_max; ++n) {
        BoundResult res = cr_bound_n(model, theta, g, n, options);
        double scaled = n * res.value;
        running_min = std::min(running_min, scaled);
        seq.entries.push_back({n, scaled, std::move(res)});
    }
    seq.liminf_upper_bound = running_min;
    return seq;
}

} // namespace qcrb

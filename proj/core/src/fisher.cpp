#include "qcrb/fisher.hpp"

#include <sstream>

namespace qcrb {

namespace {

/// Fisher matrix of an explicit finite distribution with derivative rows.
/// q: L probabilities; dq: m x L derivative table.
RMatrix fisher_from_distribution(const RVector& q, const RMatrix& dq) {
    const auto& pol = default_policy();
    const int m = static_cast<int>(dq.rows());
    RMatrix j = RMatrix::Zero(m, m);
    for (Eigen::Index k = 0; k < q.size(); ++k) {
        if (q(k) <= pol.q_floor) {
            double max_dq = dq.col(k).cwiseAbs().maxCoeff();
            if (max_dq > pol.dq_floor) {
                std::ostringstream msg;
                msg << "outcome " << k << " has probability " << q(k)
                    << " but derivative magnitude " << max_dq
                    << "; Fisher information diverges";
                throw SupportBoundary(msg.str());
            }
            continue;
        }
        j.noalias() += (dq.col(k) * dq.col(k).transpose()) / q(k);
    }
    return 0.5 * (j + j.transpose().eval());
}

} // namespace

FisherMatrix classical_fisher(const StateModel& model, const Povm& p, const RVector& theta) {
    if (p.dim() != model.dim()) {
        throw DimensionError("classical_fisher: POVM dimension differs from model");
    }
    const int m = model.num_params();
    CMatrix rho = model.state(theta);
    RVector q(p.size());
    RMatrix dq(m, p.size());
    std::vector<CMatrix> drho(m);
    for (int i = 0; i < m; ++i) drho[i] = model.deriv(theta, i);
    for (int k = 0; k < p.size(); ++k) {
        q(k) = std::max(trace_product(rho, p[k].op).real(), 0.0);
        for (int i = 0; i < m; ++i) {
            dq(i, k) = trace_product(drho[i], p[k].op).real();
        }
    }
    return FisherMatrix{fisher_from_distribution(q, dq), theta, FisherMatrix::Source::PovmInduced};
}

FisherMatrix sld_fisher(const StateModel& model, const RVector& theta) {
    const int m = model.num_params();
    CMatrix rho = model.state(theta);
    std::vector<CMatrix> slds(m);
    for (int i = 0; i < m; ++i) {
        slds[i] = lyapunov_solve(rho, model.deriv(theta, i));
    }
    RMatrix j(m, m);
    for (int i = 0; i < m; ++i) {
        for (int k = i; k < m; ++k) {
            double value = trace_product(rho, (slds[i] * slds[k]).eval()).real();
            j(i, k) = value;
            j(k, i) = value;
        }
    }
    return FisherMatrix{j, theta, FisherMatrix::Source::Sld};
}

UnbiasednessReport check_local_unbiasedness(const StateModel& model, const Povm& p,
                                            const EstimatorMap& est, const RVector& theta,
                                            double tol) {
    const int m = model.num_params();
    RVector q = outcome_distribution(model.state(theta), p);
    UnbiasednessReport report;

    RVector mean = RVector::Zero(m);
    RMatrix sensitivity = RMatrix::Zero(m, m);
    for (int k = 0; k < p.size(); ++k) {
        auto it = est.find(p[k].label);
        if (it == est.end()) {
            throw DimensionError("estimator map is missing outcome '" + p[k].label + "'");
        }
        if (it->second.size() != m) {
            throw DimensionError("estimator vector dimension mismatch at '" + p[k].label + "'");
        }
        mean += it->second * q(k);
        for (int l = 0; l < m; ++l) {
            double dq = trace_product(model.deriv(theta, l), p[k].op).real();
            sensitivity.col(l) += it->second * dq;
        }
    }
    report.max_value_defect = (mean - theta).cwiseAbs().maxCoeff();
    report.max_sensitivity_defect =
        (sensitivity - RMatrix::Identity(m, m)).cwiseAbs().maxCoeff();
    report.ok = report.max_value_defect <= tol && report.max_sensitivity_defect <= tol;
    return report;
}

ChainFisherResult adaptive_chain_fisher(const SequentialStrategy& strategy,
                                        const StateModel& model, const RVector& theta, int n,
                                        long history_cap) {
    if (n < 1) {
        throw ConfigError("adaptive_chain_fisher requires n >= 1");
    }
    CMatrix rho = model.state(theta);

    struct Branch {
        std::vector<std::string> labels;
        CMatrix element;  // tensor product of the elements observed so far
        double weight;    // probability of the history at theta
    };
    std::vector<Branch> branches{{{}, CMatrix::Identity(1, 1), 1.0}};

    // Right side accumulates one element per (step, history, outcome).
    Povm averaged;
    long history_count = 1;

    for (int step = 0; step < n; ++step) {
        std::vector<Branch> grown;
        for (const Branch& br : branches) {
            Povm povm = strategy.at(step, br.labels);
            if (povm.dim() != model.dim()) {
                throw DimensionError("sequential strategy emitted a POVM of wrong dimension");
            }
            history_count += povm.size();
            if (history_count > history_cap) {
                throw CapacityError("outcome-history count exceeds cap");
            }
            std::string prefix;
            for (const std::string& l : br.labels) prefix += l + ";";
            for (const PovmElement& e : povm.outcomes) {
                averaged.outcomes.push_back(
                    {"s" + std::to_string(step) + "|" + prefix + e.label,
                     (br.weight / n) * e.op});
                Branch next = br;
                next.labels.push_back(e.label);
                next.element = tensor(br.element, e.op);
                next.weight = br.weight * std::max(trace_product(rho, e.op).real(), 0.0);
                grown.push_back(std::move(next));
            }
        }
        branches = std::move(grown);
    }

    Povm composed;
    composed.outcomes.reserve(branches.size());
    for (const Branch& br : branches) {
        std::string label;
        for (const std::string& l : br.labels) label += (label.empty() ? "" : ";") + l;
        composed.outcomes.push_back({label, br.element});
    }

    StateModel power = tensor_power_model(model, n);
    FisherMatrix lhs = classical_fisher(power, composed, theta);
    lhs.matrix /= static_cast<double>(n);
    FisherMatrix rhs = classical_fisher(model, averaged, theta);
    return ChainFisherResult{lhs, rhs, static_cast<long>(branches.size())};
}

double psd_order_margin(const RMatrix& a, const RMatrix& b) {
    Eigen::SelfAdjointEigenSolver<RMatrix> solver(b - a, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

} // namespace qcrb

#include "qcrb/model.hpp"

#include <set>
#include <sstream>
#include <utility>

namespace qcrb {

namespace {

std::string describe(const ValidationReport& report) {
    std::ostringstream msg;
    for (size_t i = 0; i < report.size(); ++i) {
        if (i > 0) msg << "; ";
        msg << report[i].axiom << " (deviation " << report[i].magnitude << ")";
        if (!report[i].detail.empty()) msg << " " << report[i].detail;
    }
    return msg.str();
}

} // namespace

ValidationReport validate_density(const CMatrix& matrix, double tol) {
    ValidationReport report;
    if (matrix.rows() != matrix.cols() || matrix.rows() == 0) {
        report.push_back({"dimension", 0.0, "density operator must be square and nonempty"});
        return report;
    }
    double herm = hermiticity_defect(matrix);
    if (herm > tol) {
        report.push_back({"hermiticity", herm, ""});
    }
    double trace_dev = std::abs(matrix.trace() - Complex(1.0, 0.0));
    if (trace_dev > tol) {
        report.push_back({"unit-trace", trace_dev, ""});
    }
    if (herm <= tol) {
        Eigen::SelfAdjointEigenSolver<CMatrix> solver(0.5 * (matrix + matrix.adjoint().eval()),
                                                      Eigen::EigenvaluesOnly);
        double min_eig = solver.eigenvalues().minCoeff();
        if (min_eig < -tol) {
            report.push_back({"positivity", -min_eig, ""});
        }
    }
    return report;
}

DensityOperator::DensityOperator(CMatrix matrix) : matrix_(std::move(matrix)) {
    ValidationReport report = validate_density(matrix_);
    if (!report.empty()) {
        throw InvalidOperator("not a density operator: " + describe(report));
    }
}

Povm Povm::checked(std::vector<PovmElement> outcomes, double tol) {
    Povm p{std::move(outcomes)};
    ValidationReport report = validate_povm(p, tol);
    if (!report.empty()) {
        throw InvalidOperator("not a POVM: " + describe(report));
    }
    return p;
}

ValidationReport validate_povm(const Povm& p, double tol) {
    ValidationReport report;
    if (p.outcomes.empty()) {
        report.push_back({"completeness", 1.0, "no outcomes"});
        return report;
    }
    int dim = static_cast<int>(p.outcomes.front().op.rows());
    std::set<std::string> labels;
    CMatrix sum = CMatrix::Zero(dim, dim);
    for (const PovmElement& e : p.outcomes) {
        if (e.op.rows() != dim || e.op.cols() != dim) {
            report.push_back({"dimension", 0.0, "element '" + e.label + "' has mismatched shape"});
            return report;
        }
        if (!labels.insert(e.label).second) {
            report.push_back({"label-uniqueness", 0.0, "duplicate label '" + e.label + "'"});
        }
        double herm = hermiticity_defect(e.op);
        if (herm > tol) {
            report.push_back({"hermiticity", herm, "element '" + e.label + "'"});
            continue;
        }
        Eigen::SelfAdjointEigenSolver<CMatrix> solver(e.op, Eigen::EigenvaluesOnly);
        double min_eig = solver.eigenvalues().minCoeff();
        if (min_eig < -tol) {
            report.push_back({"positivity", -min_eig, "element '" + e.label + "'"});
        }
        sum += e.op;
    }
    double completeness = (sum - CMatrix::Identity(dim, dim)).cwiseAbs().maxCoeff();
    if (completeness > tol) {
        report.push_back({"completeness", completeness, "sum of elements is not the identity"});
    }
    return report;
}

ParameterDomain::ParameterDomain(RVector lower, RVector upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
    if (lower_.size() != upper_.size() || lower_.size() == 0) {
        throw DimensionError("parameter box needs matching nonempty bounds");
    }
    for (Eigen::Index i = 0; i < lower_.size(); ++i) {
        if (!(lower_(i) < upper_(i))) {
            throw ConfigError("parameter box requires lower < upper componentwise");
        }
    }
}

bool ParameterDomain::contains(const RVector& theta, double slack) const {
    if (theta.size() != lower_.size()) return false;
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
        if (theta(i) < lower_(i) - slack || theta(i) > upper_(i) + slack) return false;
    }
    return true;
}

RVector ParameterDomain::clip(const RVector& theta) const {
    if (theta.size() != lower_.size()) {
        throw DimensionError("clip: parameter dimension mismatch");
    }
    return theta.cwiseMax(lower_).cwiseMin(upper_);
}

double ParameterDomain::norm_bound() const {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < lower_.size(); ++i) {
        sum += std::pow(std::max(std::abs(lower_(i)), std::abs(upper_(i))), 2);
    }
    return std::sqrt(sum);
}

StateModel::StateModel(std::string name, int dim, ParameterDomain domain,
                       StateFn state_fn, DerivFn deriv_fn)
    : name_(std::move(name)), dim_(dim), domain_(std::move(domain)),
      state_fn_(std::move(state_fn)), deriv_fn_(std::move(deriv_fn)) {}

CMatrix StateModel::state(const RVector& theta) const {
    if (theta.size() != domain_.dim()) {
        throw DimensionError("state: parameter dimension mismatch for model " + name_);
    }
    return state_fn_(theta);
}

CMatrix StateModel::deriv(const RVector& theta, int i) const {
    if (theta.size() != domain_.dim() || i < 0 || i >= domain_.dim()) {
        throw DimensionError("deriv: parameter index out of range for model " + name_);
    }
    return deriv_fn_(theta, i);
}

DensityOperator StateModel::density(const RVector& theta) const {
    return DensityOperator(state(theta));
}

ValidationReport verify_model(const StateModel& model, int points_per_axis) {
    const auto& pol = default_policy();
    ValidationReport report;
    const int m = model.num_params();
    const RVector& lo = model.domain().lower();
    const RVector& hi = model.domain().upper();
    // Shrink slightly so finite-difference probes stay inside the box.
    const double h = pol.deriv_fd_step;

    std::vector<RVector> grid;
    std::vector<int> index(m, 0);
    while (true) {
        RVector theta(m);
        for (int i = 0; i < m; ++i) {
            double span = hi(i) - lo(i);
            double a = lo(i) + 0.05 * span + h;
            double b = hi(i) - 0.05 * span - h;
            double t = points_per_axis == 1 ? 0.5
                                            : static_cast<double>(index[i]) / (points_per_axis - 1);
            theta(i) = a + t * (b - a);
        }
        grid.push_back(theta);
        int axis = 0;
        while (axis < m && ++index[axis] == points_per_axis) {
            index[axis] = 0;
            ++axis;
        }
        if (axis == m) break;
    }

    for (const RVector& theta : grid) {
        ValidationReport state_report = validate_density(model.state(theta));
        for (auto& issue : state_report) {
            issue.detail = "state at grid point";
            report.push_back(issue);
        }
        for (int i = 0; i < m; ++i) {
            CMatrix d = model.deriv(theta, i);
            double herm = hermiticity_defect(d);
            if (herm > pol.solver_tol) {
                report.push_back({"derivative-hermiticity", herm, ""});
            }
            double tr = std::abs(d.trace());
            if (tr > pol.solver_tol) {
                report.push_back({"derivative-traceless", tr, ""});
            }
            RVector tp = theta, tm = theta;
            tp(i) += h;
            tm(i) -= h;
            CMatrix fd = (model.state(tp) - model.state(tm)) / (2.0 * h);
            double err = (fd - d).cwiseAbs().maxCoeff();
            if (err > pol.deriv_fd_tol) {
                std::ostringstream detail;
                detail << "analytic vs finite-difference derivative, parameter " << i;
                report.push_back({"derivative-consistency", err, detail.str()});
            }
        }
    }
    return report;
}

WeightMatrix::WeightMatrix(RMatrix g) : g_(std::move(g)) {
    if (g_.rows() != g_.cols() || g_.rows() == 0) {
        throw InvalidOperator("weight matrix must be square and nonempty");
    }
    double sym = (g_ - g_.transpose()).cwiseAbs().maxCoeff();
    if (sym > 1e-12) {
        throw InvalidOperator("weight matrix must be symmetric (deviation " +
                              std::to_string(sym) + ")");
    }
    Eigen::SelfAdjointEigenSolver<RMatrix> solver(g_, Eigen::EigenvaluesOnly);
    double min_eig = solver.eigenvalues().minCoeff();
    if (min_eig < -default_policy().structural_tol) {
        throw InvalidOperator("weight matrix must be PSD (min eigenvalue " +
                              std::to_string(min_eig) + ")");
    }
}

RVector outcome_distribution(const CMatrix& rho, const Povm& p) {
    const auto& pol = default_policy();
    if (p.size() == 0 || rho.rows() != p.dim() || rho.rows() != rho.cols()) {
        throw DimensionError("outcome_distribution: state and POVM dimensions differ");
    }
    RVector q(p.size());
    for (int k = 0; k < p.size(); ++k) {
        double value = trace_product(rho, p[k].op).real();
        if (value < -pol.structural_tol) {
            std::ostringstream msg;
            msg << "outcome '" << p[k].label << "' has probability " << value;
            throw InvalidOperator(msg.str());
        }
        q(k) = std::max(value, 0.0);
    }
    double sum = q.sum();
    if (std::abs(sum - 1.0) > pol.structural_tol) {
        std::ostringstream msg;
        msg << "outcome probabilities sum to " << sum;
        throw InvalidOperator(msg.str());
    }
    return q / sum;
}

RVector outcome_distribution(const DensityOperator& rho, const Povm& p) {
    return outcome_distribution(rho.matrix(), p);
}

StateModel tensor_power_model(const StateModel& model, int n, int dim_cap) {
    if (n < 1) {
        throw ConfigError("tensor power requires n >= 1");
    }
    double dim_out = std::pow(static_cast<double>(model.dim()), n);
    if (dim_out > static_cast<double>(dim_cap)) {
        std::ostringstream msg;
        msg << "tensor power dimension " << dim_out << " exceeds cap " << dim_cap;
        throw CapacityError(msg.str());
    }
    if (n == 1) {
        return model;
    }
    int dim = static_cast<int>(dim_out);
    // Copy by value so the power model is self-contained.
    StateModel base = model;
    auto state_fn = [base, n](const RVector& theta) {
        CMatrix rho = base.state(theta);
        CMatrix out = rho;
        for (int k = 1; k < n; ++k) out = tensor(out, rho);
        return out;
    };
    auto deriv_fn = [base, n](const RVector& theta, int i) {
        CMatrix rho = base.state(theta);
        CMatrix drho = base.deriv(theta, i);
        CMatrix out;
        for (int k = 0; k < n; ++k) {
            CMatrix term = (k == 0) ? drho : rho;
            for (int j = 1; j < n; ++j) {
                term = tensor(term, (j == k) ? drho : rho);
            }
            out = (k == 0) ? term : (out + term).eval();
        }
        return out;
    };
    return StateModel(model.name() + "^" + std::to_string(n), dim, model.domain(),
                      std::move(state_fn), std::move(deriv_fn));
}

Povm tensor_povm(const std::vector<Povm>& parts) {
    if (parts.empty()) {
        throw DimensionError("tensor_povm requires at least one factor");
    }
    Povm out = parts.front();
    for (size_t idx = 1; idx < parts.size(); ++idx) {
        const Povm& next = parts[idx];
        Povm merged;
        merged.outcomes.reserve(static_cast<size_t>(out.size()) * next.size());
        for (const PovmElement& a : out.outcomes) {
            for (const PovmElement& b : next.outcomes) {
                merged.outcomes.push_back({a.label + "⊗" + b.label, tensor(a.op, b.op)});
            }
        }
        out = std::move(merged);
    }
    return out;
}

Povm coarse_grain(const Povm& p, const std::map<std::string, std::string>& partition) {
    std::map<std::string, CMatrix> groups;
    std::vector<std::string> order;
    for (const PovmElement& e : p.outcomes) {
        auto it = partition.find(e.label);
        if (it == partition.end()) {
            throw PartitionError("outcome '" + e.label + "' is not covered by the partition");
        }
        auto [slot, inserted] = groups.try_emplace(it->second, e.op);
        if (inserted) {
            order.push_back(it->second);
        } else {
            slot->second += e.op;
        }
    }
    Povm out;
    out.outcomes.reserve(order.size());
    for (const std::string& g : order) {
        out.outcomes.push_back({g, groups.at(g)});
    }
    return out;
}

} // namespace qcrb

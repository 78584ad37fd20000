#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "qcrb/matrix.hpp"

namespace qcrb {

/// One validation defect: which axiom failed and by how much.
struct ValidationIssue {
    std::string axiom;
    double magnitude = 0.0;
    std::string detail;
};

using ValidationReport = std::vector<ValidationIssue>;

/// d x d positive-semidefinite trace-one operator. The constructor enforces
/// the invariants; use validate_density to classify candidates non-throwing.
class DensityOperator {
  public:
    explicit DensityOperator(CMatrix matrix);

    int dim() const { return static_cast<int>(matrix_.rows()); }
    const CMatrix& matrix() const { return matrix_; }

  private:
    CMatrix matrix_;
};

/// Non-throwing density-operator check; empty report means valid.
ValidationReport validate_density(const CMatrix& matrix,
                                  double tol = default_policy().structural_tol);

struct PovmElement {
    std::string label;
    CMatrix op;
};

/// Finite-outcome positive operator valued measure. Plain data so that
/// invalid candidates can be constructed and classified by validate_povm.
struct Povm {
    std::vector<PovmElement> outcomes;

    int dim() const { return outcomes.empty() ? 0 : static_cast<int>(outcomes.front().op.rows()); }
    int size() const { return static_cast<int>(outcomes.size()); }
    const PovmElement& operator[](int k) const { return outcomes[static_cast<size_t>(k)]; }

    /// Throws InvalidOperator if validate_povm reports any defect.
    static Povm checked(std::vector<PovmElement> outcomes,
                        double tol = default_policy().structural_tol);
};

/// Reports every violated measurement axiom with its numeric deviation:
/// element Hermiticity/positivity, completeness (sum equals identity),
/// label uniqueness, and dimension consistency.
ValidationReport validate_povm(const Povm& p,
                               double tol = default_policy().structural_tol);

/// Axis-aligned box of admissible parameters.
class ParameterDomain {
  public:
    ParameterDomain(RVector lower, RVector upper);

    int dim() const { return static_cast<int>(lower_.size()); }
    const RVector& lower() const { return lower_; }
    const RVector& upper() const { return upper_; }

    bool contains(const RVector& theta, double slack = 0.0) const;
    RVector clip(const RVector& theta) const;
    RVector center() const { return 0.5 * (lower_ + upper_); }
    /// Largest Euclidean norm over the box corners (finite for any box).
    double norm_bound() const;

  private:
    RVector lower_;
    RVector upper_;
};

/// Smooth parametric family theta -> rho_theta with analytic partials.
class StateModel {
  public:
    using StateFn = std::function<CMatrix(const RVector&)>;
    using DerivFn = std::function<CMatrix(const RVector&, int)>;

    StateModel(std::string name, int dim, ParameterDomain domain,
               StateFn state_fn, DerivFn deriv_fn);

    const std::string& name() const { return name_; }
    int dim() const { return dim_; }
    int num_params() const { return domain_.dim(); }
    const ParameterDomain& domain() const { return domain_; }

    /// Raw rho_theta (no validation; registry models are verified once).
    CMatrix state(const RVector& theta) const;
    /// Partial derivative of rho_theta along parameter i.
    CMatrix deriv(const RVector& theta, int i) const;
    /// Validated density operator at theta.
    DensityOperator density(const RVector& theta) const;

  private:
    std::string name_;
    int dim_;
    ParameterDomain domain_;
    StateFn state_fn_;
    DerivFn deriv_fn_;
};

/// Cross-checks the analytic derivatives of a model against central finite
/// differences on a grid (points_per_axis^m points shrunk slightly into the
/// interior), and verifies derivatives are Hermitian and traceless.
/// Returns a report of violations; empty means the model passes.
ValidationReport verify_model(const StateModel& model, int points_per_axis = 3);

/// m x m symmetric PSD weight matrix defining the accuracy figure tr(G V).
class WeightMatrix {
  public:
    explicit WeightMatrix(RMatrix g);
    static WeightMatrix identity(int m) { return WeightMatrix(RMatrix::Identity(m, m)); }

    int dim() const { return static_cast<int>(g_.rows()); }
    const RMatrix& matrix() const { return g_; }

  private:
    RMatrix g_;
};

/// Outcome probabilities q_k = tr(rho E_k). Entries within -structural_tol
/// of zero are clipped to zero; the vector is renormalized provided the raw
/// sum is within structural_tol of one.
RVector outcome_distribution(const CMatrix& rho, const Povm& p);
RVector outcome_distribution(const DensityOperator& rho, const Povm& p);

/// The n-fold i.i.d. extension: states are rho^(x)n, derivatives follow the
/// product rule. Throws CapacityError when dim^n exceeds the policy cap.
StateModel tensor_power_model(const StateModel& model, int n,
                              int dim_cap = default_policy().dim_cap);

/// Outcome-wise tensor product; labels are joined with "\u2297" (the
/// tensor-product sign).
Povm tensor_povm(const std::vector<Povm>& parts);

/// Merge outcomes by group; `partition` maps every outcome label to its
/// group label. Uncovered labels raise PartitionError.
Povm coarse_grain(const Povm& p, const std::map<std::string, std::string>& partition);

} // namespace qcrb

#pragma once

#include <map>
#include <string>

#include "qcrb/model.hpp"

namespace qcrb {

/// Builds one of the built-in models by registry name:
///   "qubit-bloch3"     full Bloch model (I + theta.sigma)/2, box |theta_i| <= 0.57
///   "qubit-rotation1"  phase rotation of (I + r sigma_x)/2 about z, theta in [-1.2, 1.2]
///                      (parameter "r", default 0.9)
///   "classical-diag"   diagonal family with probabilities (theta_1..theta_{d-1}, 1 - sum)
///                      (parameter "d", default 2)
/// The analytic derivatives are cross-checked against finite differences at
/// registration; a failing model throws InvalidOperator.
StateModel make_model(const std::string& name,
                      const std::map<std::string, double>& params = {});

/// Names accepted by make_model, in stable order.
std::vector<std::string> model_names();

/// Named measurements:
///   "computational"  projectors onto the computational basis (any dim)
///   "x" | "y" | "z"  qubit projective measurement along one Pauli axis
///   "pauli6"         six-outcome POVM {(I +- sigma_a)/6 : a in {x,y,z}}
///   "trivial"        the single-outcome POVM {I}
Povm make_povm(const std::string& name, int dim);

/// The default first-stage measurement for a registry model: "pauli6" for the
/// qubit families, the computational-basis projectors for classical-diag.
Povm default_preliminary_povm(const StateModel& model);

} // namespace qcrb

#include "qcrb/registry.hpp"

#include <cmath>
#include <sstream>

namespace qcrb {

namespace {

double param_or(const std::map<std::string, double>& params, const std::string& key,
                double fallback) {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
}

StateModel make_qubit_bloch3() {
    RVector lo(3), hi(3);
    // Largest box inscribed in the Bloch ball has half-width 1/sqrt(3).
    lo.setConstant(-0.57);
    hi.setConstant(0.57);
    auto state_fn = [](const RVector& t) -> CMatrix {
        return 0.5 * (identity(2) + t(0) * pauli_x() + t(1) * pauli_y() + t(2) * pauli_z());
    };
    auto deriv_fn = [](const RVector&, int i) -> CMatrix {
        switch (i) {
            case 0: return 0.5 * pauli_x();
            case 1: return 0.5 * pauli_y();
            default: return 0.5 * pauli_z();
        }
    };
    return StateModel("qubit-bloch3", 2, ParameterDomain(lo, hi), state_fn, deriv_fn);
}

StateModel make_qubit_rotation1(double r) {
    if (!(r > 0.0) || r > 1.0) {
        throw ConfigError("qubit-rotation1 requires 0 < r <= 1");
    }
    RVector lo(1), hi(1);
    lo(0) = -1.2;
    hi(0) = 1.2;
    // exp(-i t sigma_z / 2) (I + r sigma_x)/2 exp(+i t sigma_z / 2)
    // = (I + r cos(t) sigma_x + r sin(t) sigma_y)/2.
    auto state_fn = [r](const RVector& t) -> CMatrix {
        return 0.5 * (identity(2) + r * std::cos(t(0)) * pauli_x() +
                      r * std::sin(t(0)) * pauli_y());
    };
    auto deriv_fn = [r](const RVector& t, int) -> CMatrix {
        return 0.5 * (-r * std::sin(t(0)) * pauli_x() + r * std::cos(t(0)) * pauli_y());
    };
    return StateModel("qubit-rotation1", 2, ParameterDomain(lo, hi), state_fn, deriv_fn);
}

StateModel make_classical_diag(int d) {
    if (d < 2 || d > 8) {
        throw ConfigError("classical-diag requires 2 <= d <= 8");
    }
    int m = d - 1;
    RVector lo(m), hi(m);
    lo.setConstant(0.05);
    hi.setConstant(0.9 / m);
    auto state_fn = [d](const RVector& t) -> CMatrix {
        CMatrix rho = CMatrix::Zero(d, d);
        double rest = 1.0;
        for (int i = 0; i < d - 1; ++i) {
            rho(i, i) = Complex(t(i), 0.0);
            rest -= t(i);
        }
        rho(d - 1, d - 1) = Complex(rest, 0.0);
        return rho;
    };
    auto deriv_fn = [d](const RVector&, int i) -> CMatrix {
        CMatrix drho = CMatrix::Zero(d, d);
        drho(i, i) = Complex(1.0, 0.0);
        drho(d - 1, d - 1) = Complex(-1.0, 0.0);
        return drho;
    };
    return StateModel("classical-diag", d, ParameterDomain(lo, hi), state_fn, deriv_fn);
}

} // namespace

StateModel make_model(const std::string& name, const std::map<std::string, double>& params) {
    StateModel model = [&]() {
        if (name == "qubit-bloch3") return make_qubit_bloch3();
        if (name == "qubit-rotation1") return make_qubit_rotation1(param_or(params, "r", 0.9));
        if (name == "classical-diag") {
            return make_classical_diag(static_cast<int>(param_or(params, "d", 2.0)));
        }
        throw ConfigError("unknown model '" + name + "'");
    }();
    ValidationReport report = verify_model(model, 2);
    if (!report.empty()) {
        std::ostringstream msg;
        msg << "model '" << name << "' failed registration checks: " << report.front().axiom
            << " (deviation " << report.front().magnitude << ")";
        throw InvalidOperator(msg.str());
    }
    return model;
}

std::vector<std::string> model_names() {
    return {"qubit-bloch3", "qubit-rotation1", "classical-diag"};
}

Povm make_povm(const std::string& name, int dim) {
    if (name == "trivial") {
        return Povm{{{"all", identity(dim)}}};
    }
    if (name == "computational") {
        Povm p;
        for (int k = 0; k < dim; ++k) {
            CMatrix proj = CMatrix::Zero(dim, dim);
            proj(k, k) = Complex(1.0, 0.0);
            p.outcomes.push_back({std::to_string(k), proj});
        }
        return p;
    }
    if (dim != 2) {
        throw ConfigError("measurement '" + name + "' is only defined for qubits");
    }
    auto axis_povm = [](const std::string& axis, const CMatrix& sigma, double weight) {
        Povm p;
        p.outcomes.push_back({axis + "+", weight * 0.5 * (identity(2) + sigma)});
        p.outcomes.push_back({axis + "-", weight * 0.5 * (identity(2) - sigma)});
        return p;
    };
    if (name == "x") return axis_povm("x", pauli_x(), 1.0);
    if (name == "y") return axis_povm("y", pauli_y(), 1.0);
    if (name == "z") return axis_povm("z", pauli_z(), 1.0);
    if (name == "pauli6") {
        Povm p;
        for (const auto& [axis, sigma] :
             std::vector<std::pair<std::string, CMatrix>>{{"x", pauli_x()}, {"y", pauli_y()},
                                                          {"z", pauli_z()}}) {
            p.outcomes.push_back({axis + "+", (identity(2) + sigma) / 6.0});
            p.outcomes.push_back({axis + "-", (identity(2) - sigma) / 6.0});
        }
        return p;
    }
    throw ConfigError("unknown measurement '" + name + "'");
}

Povm default_preliminary_povm(const StateModel& model) {
    if (model.dim() == 2 && model.name().rfind("qubit", 0) == 0) {
        return make_povm("pauli6", 2);
    }
    return make_povm("computational", model.dim());
}

} // namespace qcrb

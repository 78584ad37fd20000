#include <doctest.h>

#include "qcrb/solver.hpp"

#include "helpers.hpp"

using namespace qcrb;
using namespace qcrb::testing;

namespace {

/// Exhaustive oracle: best projective qubit measurement over a polar/azimuth
/// grid of the Bloch sphere.
double projective_grid_bound(const StateModel& model, const RVector& theta,
                             const WeightMatrix& g, int steps) {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < steps; ++i) {
        double polar = M_PI * static_cast<double>(i) / steps;
        for (int j = 0; j < steps; ++j) {
            double azimuth = 2.0 * M_PI * static_cast<double>(j) / steps;
            CMatrix axis = std::sin(polar) * std::cos(azimuth) * pauli_x() +
                           std::sin(polar) * std::sin(azimuth) * pauli_y() +
                           std::cos(polar) * pauli_z();
            Povm p{{{"+", 0.5 * (identity(2) + axis)}, {"-", 0.5 * (identity(2) - axis)}}};
            double value;
            try {
                value = weighted_inverse_objective(classical_fisher(model, p, theta).matrix, g,
                                                   1e6);
            } catch (const SupportBoundary&) {
                continue;
            }
            best = std::min(best, value);
        }
    }
    return best;
}

SolverOptions quick_options() {
    SolverOptions opts;
    opts.restarts = 4;
    opts.max_evals = 3000;
    return opts;
}

} // namespace

TEST_SUITE_BEGIN("solver");

TEST_CASE("weighted_inverse_objective closed forms") {
    WeightMatrix g2 = WeightMatrix::identity(2);
    CHECK(weighted_inverse_objective(RMatrix::Identity(2, 2), g2, 1e6) == doctest::Approx(2.0));

    RMatrix j(2, 2);
    j << 4.0, 0.0, 0.0, 1.0;
    CHECK(weighted_inverse_objective(j, g2, 1e6) == doctest::Approx(1.25));

    // Singular J with G weighting the null direction returns the penalty.
    RMatrix singular(2, 2);
    singular << 1.0, 0.0, 0.0, 0.0;
    CHECK(weighted_inverse_objective(singular, g2, 1e6) == 1e6);

    // Singular J whose null space G ignores is inverted on its support.
    RMatrix g_partial(2, 2);
    g_partial << 1.0, 0.0, 0.0, 0.0;
    CHECK(weighted_inverse_objective(singular, WeightMatrix(g_partial), 1e6) ==
          doctest::Approx(1.0));
}

TEST_CASE("one-parameter rotation bound attains the SLD value") {
    StateModel rot = make_model("qubit-rotation1", {{"r", 0.9}});
    WeightMatrix g = WeightMatrix::identity(1);
    BoundResult res = cr_bound(rot, vec1(0.3), g, quick_options());
    CHECK(res.value == doctest::Approx(1.0 / 0.81).epsilon(1e-3));
    CHECK(validate_povm(res.argmin_povm).empty());

    // Coarse grid oracle (the fine 3600-point grid runs in the acceptance
    // suite); the solver may be better, never worse beyond tolerance.
    double grid = projective_grid_bound(rot, vec1(0.3), g, 24);
    CHECK(res.value <= grid + 1e-6);
    CHECK(res.value >= 1.0 / 0.81 - 1e-6);
}

TEST_CASE("classical reduction: diagonal family bound equals the eigenbasis value") {
    StateModel diag = make_model("classical-diag");
    WeightMatrix g = WeightMatrix::identity(1);
    RVector theta = vec1(0.3);
    double expected = weighted_inverse_objective(
        classical_fisher(diag, make_povm("computational", 2), theta).matrix, g, 1e6);
    CHECK(expected == doctest::Approx(0.3 * 0.7).epsilon(1e-12));
    BoundResult res = cr_bound(diag, theta, g, quick_options());
    CHECK(res.value == doctest::Approx(expected).epsilon(1e-4));
}

TEST_CASE("zero weight matrix gives a zero bound") {
    StateModel rot = make_model("qubit-rotation1");
    WeightMatrix zero((RMatrix(1, 1) << 0.0).finished());
    SolverOptions opts = quick_options();
    opts.restarts = 1;
    BoundResult res = cr_bound(rot, vec1(0.1), zero, opts);
    CHECK(res.value == 0.0);
}

TEST_CASE("bound respects the Helstrom floor") {
    RngStream rng(41, 0);
    for (const std::string& name : model_names()) {
        StateModel model = make_model(name);
        WeightMatrix g = WeightMatrix::identity(model.num_params());
        RVector theta = random_interior_point(model.domain(), rng);
        double floor = weighted_inverse_objective(sld_fisher(model, theta).matrix, g, 1e6);
        SolverOptions opts = quick_options();
        opts.restarts = 2;
        opts.max_evals = 1500;
        BoundResult res = cr_bound(model, theta, g, opts);
        CHECK(res.value >= floor - 1e-6);
    }
}

TEST_CASE("determinism and scaling covariance") {
    StateModel rot = make_model("qubit-rotation1");
    WeightMatrix g = WeightMatrix::identity(1);
    SolverOptions opts = quick_options();
    opts.restarts = 3;
    opts.max_evals = 1200;

    BoundResult a = cr_bound(rot, vec1(0.3), g, opts);
    BoundResult b = cr_bound(rot, vec1(0.3), g, opts);
    CHECK(a.value == b.value);  // bit identical
    CHECK(a.evaluations == b.evaluations);

    WeightMatrix g5((RMatrix(1, 1) << 5.0).finished());
    BoundResult c = cr_bound(rot, vec1(0.3), g5, opts);
    CHECK(c.value / a.value == doctest::Approx(5.0).epsilon(1e-9));
    REQUIRE(c.argmin_povm.size() == a.argmin_povm.size());
    for (int k = 0; k < a.argmin_povm.size(); ++k) {
        CHECK((c.argmin_povm[k].op - a.argmin_povm[k].op).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("increasing the outcome count never hurts") {
    StateModel rot = make_model("qubit-rotation1");
    WeightMatrix g = WeightMatrix::identity(1);
    SolverOptions opts = quick_options();
    double previous = std::numeric_limits<double>::infinity();
    for (int l : {2, 4}) {  // m+1, then 2d = d^2
        opts.outcomes = l;
        BoundResult res = cr_bound(rot, vec1(0.3), g, opts);
        CHECK(res.value <= previous + 1e-3);
        previous = res.value;
    }
}

TEST_CASE("outcome count below m+1 is rejected") {
    StateModel bloch = make_model("qubit-bloch3");
    SolverOptions opts = quick_options();
    opts.outcomes = 2;  // m + 1 = 4
    CHECK_THROWS_AS(cr_bound(bloch, vec3(0.1, 0.0, -0.1), WeightMatrix::identity(3), opts),
                    ConfigError);
}

TEST_CASE("singular SLD information is reported as degenerate") {
    StateModel zline = make_zline_model(1.0);
    WeightMatrix g = WeightMatrix::identity(1);
    CHECK_THROWS_AS(cr_bound(zline, vec1(1.0), g, quick_options()), Error);
}

TEST_CASE("n-copy bound: identity at n = 1 and product feasibility at n = 2") {
    StateModel rot = make_model("qubit-rotation1", {{"r", 0.9}});
    WeightMatrix g = WeightMatrix::identity(1);
    SolverOptions opts = quick_options();

    BoundResult one = cr_bound_n(rot, vec1(0.3), g, 1, opts);
    BoundResult direct = cr_bound(rot, vec1(0.3), g, opts);
    CHECK(one.value == direct.value);

    BoundResult two = cr_bound_n(rot, vec1(0.3), g, 2, opts);
    // Product of the single-copy argmin is feasible for two copies, so the
    // two-copy bound is at most half the single-copy value (up to solver
    // noise), never better than the Helstrom floor.
    CHECK(2.0 * two.value <= direct.value + 2e-3);
    double floor = weighted_inverse_objective(
        sld_fisher(tensor_power_model(rot, 2), vec1(0.3)).matrix, g, 1e6);
    CHECK(two.value >= floor - 1e-6);

    // The explicit product POVM is a feasible two-copy point: its objective
    // equals half the single-copy value by additivity and dominates the
    // two-copy optimum.
    StateModel power = tensor_power_model(rot, 2);
    Povm product = tensor_povm({direct.argmin_povm, direct.argmin_povm});
    double product_value = weighted_inverse_objective(
        classical_fisher(power, product, vec1(0.3)).matrix, g, 1e6);
    CHECK(product_value == doctest::Approx(0.5 * direct.value).epsilon(1e-9));
    CHECK(two.value <= product_value + 2e-3);
}

TEST_CASE("bound sequence for a classical family is constant") {
    StateModel diag = make_model("classical-diag");
    WeightMatrix g = WeightMatrix::identity(1);
    SolverOptions opts = quick_options();
    BoundSequence seq = quantum_cr_bound(diag, vec1(0.3), g, 2, opts);
    REQUIRE(seq.entries.size() == 2);
    CHECK(seq.entries[0].scaled_value ==
          doctest::Approx(seq.entries[1].scaled_value).epsilon(2e-3));
    CHECK(seq.liminf_upper_bound <= seq.entries[0].scaled_value + 1e-12);

    BoundSequence single = quantum_cr_bound(diag, vec1(0.3), g, 1, opts);
    REQUIRE(single.entries.size() == 1);
    CHECK(single.entries[0].scaled_value == single.liminf_upper_bound);
}

TEST_SUITE_END();

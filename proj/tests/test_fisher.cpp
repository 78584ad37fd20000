#include <doctest.h>

#include <memory>

#include "helpers.hpp"

using namespace qcrb;
using namespace qcrb::testing;

TEST_SUITE_BEGIN("fisher");

TEST_CASE("classical_fisher closed forms on the diagonal qubit line") {
    StateModel zline = make_zline_model();
    Povm z = make_povm("z", 2);
    // q = (1 +- t)/2 gives J = 1/(1 - t^2).
    CHECK(classical_fisher(zline, z, vec1(0.0)).matrix(0, 0) ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(classical_fisher(zline, z, vec1(0.5)).matrix(0, 0) ==
          doctest::Approx(1.0 / 0.75).epsilon(1e-12));

    // The trivial measurement carries no information.
    CHECK(classical_fisher(zline, make_povm("trivial", 2), vec1(0.3)).matrix.cwiseAbs()
              .maxCoeff() <= 1e-15);

    // Two i.i.d. copies double the information (brute force over 4 outcomes).
    StateModel two = tensor_power_model(zline, 2);
    Povm zz = tensor_povm({z, z});
    CHECK(classical_fisher(two, zz, vec1(0.5)).matrix(0, 0) ==
          doctest::Approx(2.0 / 0.75).epsilon(1e-12));
}

TEST_CASE("classical_fisher matches the finite-difference log-likelihood oracle") {
    RngStream rng(31, 0);
    for (const std::string& name : model_names()) {
        StateModel model = make_model(name);
        for (int rep = 0; rep < 5; ++rep) {
            Povm p = random_povm(model.dim(), model.dim() + 2, rng);
            RVector theta = random_interior_point(model.domain(), rng);
            RMatrix impl = classical_fisher(model, p, theta).matrix;
            RMatrix oracle = fd_log_likelihood_fisher(model, p, theta);
            CHECK((impl - oracle).cwiseAbs().maxCoeff() <= 1e-6);
        }
    }
}

TEST_CASE("classical_fisher flags support boundaries") {
    // Pure state at the box edge: outcome "z-" has q = 0 but dq != 0.
    StateModel zline = make_zline_model(1.0);
    Povm z = make_povm("z", 2);
    CHECK_THROWS_AS(classical_fisher(zline, z, vec1(1.0)), SupportBoundary);
}

TEST_CASE("sld_fisher closed forms") {
    StateModel zline = make_zline_model();
    CHECK(sld_fisher(zline, vec1(0.0)).matrix(0, 0) == doctest::Approx(1.0).epsilon(1e-12));

    // Rotation family: J^S = r^2 at every angle.
    StateModel rot = make_model("qubit-rotation1", {{"r", 0.9}});
    for (double t : {-0.7, 0.0, 0.3, 1.0}) {
        CHECK(sld_fisher(rot, vec1(t)).matrix(0, 0) == doctest::Approx(0.81).epsilon(1e-10));
    }

    // Commuting family: SLD Fisher equals the classical Fisher of the
    // eigenbasis measurement.
    StateModel diag = make_model("classical-diag", {{"d", 3.0}});
    RngStream rng(32, 0);
    RVector theta = random_interior_point(diag.domain(), rng);
    RMatrix sld = sld_fisher(diag, theta).matrix;
    RMatrix classical =
        classical_fisher(diag, make_povm("computational", 3), theta).matrix;
    CHECK((sld - classical).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("sld_fisher of the full Bloch model matches the analytic form") {
    StateModel bloch = make_model("qubit-bloch3");
    RngStream rng(33, 0);
    for (int rep = 0; rep < 10; ++rep) {
        RVector b = random_interior_point(bloch.domain(), rng);
        double b2 = b.squaredNorm();
        RMatrix expected = RMatrix::Identity(3, 3) + b * b.transpose() / (1.0 - b2);
        CHECK((sld_fisher(bloch, b).matrix - expected).cwiseAbs().maxCoeff() <= 1e-9);
    }
}

TEST_CASE("quantum information inequality J^M <= J^SLD") {
    RngStream rng(34, 0);
    for (const std::string& name : model_names()) {
        StateModel model = make_model(name);
        for (int rep = 0; rep < 50; ++rep) {
            Povm p = random_povm(model.dim(),
                                 model.dim() + 1 + static_cast<int>(rng.next_u64() % 4), rng);
            RVector theta = random_interior_point(model.domain(), rng);
            RMatrix jm = classical_fisher(model, p, theta).matrix;
            RMatrix js = sld_fisher(model, theta).matrix;
            CHECK(psd_order_margin(jm, js) >= -1e-9);
        }
    }
}

TEST_CASE("coarse graining never increases information") {
    RngStream rng(35, 0);
    for (int rep = 0; rep < 100; ++rep) {
        const std::string name = model_names()[static_cast<size_t>(rep) % model_names().size()];
        StateModel model = make_model(name);
        int outcomes = model.dim() + 2 + static_cast<int>(rng.next_u64() % 3);
        Povm p = random_povm(model.dim(), outcomes, rng);
        RVector theta = random_interior_point(model.domain(), rng);
        std::map<std::string, std::string> partition;
        int groups = 2 + static_cast<int>(rng.next_u64() % static_cast<unsigned>(outcomes - 1));
        for (int k = 0; k < p.size(); ++k) {
            partition[p[k].label] =
                "g" + std::to_string(static_cast<int>(rng.next_u64() % static_cast<unsigned>(groups)));
        }
        Povm grained = coarse_grain(p, partition);
        RMatrix fine = classical_fisher(model, p, theta).matrix;
        RMatrix coarse = classical_fisher(model, grained, theta).matrix;
        CHECK(psd_order_margin(coarse, fine) >= -1e-9);
    }
}

TEST_CASE("fisher information is additive over tensor powers") {
    RngStream rng(36, 0);
    StateModel model = make_model("qubit-rotation1");
    Povm p = random_povm(2, 3, rng);
    RVector theta = vec1(0.25);
    RMatrix single = classical_fisher(model, p, theta).matrix;
    for (int n = 2; n <= 3; ++n) {
        StateModel power = tensor_power_model(model, n);
        Povm joint = tensor_povm(std::vector<Povm>(static_cast<size_t>(n), p));
        RMatrix total = classical_fisher(power, joint, theta).matrix;
        CHECK((total - static_cast<double>(n) * single).cwiseAbs().maxCoeff() <= 1e-9);
    }
}

TEST_CASE("local unbiasedness closed forms") {
    StateModel zline = make_zline_model();
    Povm z = make_povm("z", 2);

    // theta_hat(z+-) = +-1 is locally unbiased at theta = 0 and, in fact,
    // at every theta: mean = t and sensitivity = 1.
    EstimatorMap plus_minus{{"z+", vec1(1.0)}, {"z-", vec1(-1.0)}};
    CHECK(check_local_unbiasedness(zline, z, plus_minus, vec1(0.0), 1e-9).ok);
    CHECK(check_local_unbiasedness(zline, z, plus_minus, vec1(0.37), 1e-9).ok);

    // Constant estimators fail the first condition.
    EstimatorMap constant{{"z+", vec1(0.2)}, {"z-", vec1(0.2)}};
    UnbiasednessReport rep = check_local_unbiasedness(zline, z, constant, vec1(0.0), 1e-9);
    CHECK_FALSE(rep.ok);
    CHECK(rep.max_value_defect == doctest::Approx(0.2));

    // The canonical construction theta + J^{-1} d log q is locally unbiased
    // at its expansion point.
    double t0 = 0.4;
    double j = 1.0 / (1.0 - t0 * t0);
    EstimatorMap canonical{{"z+", vec1(t0 + (1.0 / j) * (1.0 / (1.0 + t0)))},
                           {"z-", vec1(t0 - (1.0 / j) * (1.0 / (1.0 - t0)))}};
    CHECK(check_local_unbiasedness(zline, z, canonical, vec1(t0), 1e-9).ok);
}

TEST_CASE("chain identity for non-adaptive strategies") {
    StateModel zline = make_zline_model();
    Povm z = make_povm("z", 2);
    SequentialStrategy fixed = SequentialStrategy::fixed(z);

    ChainFisherResult res1 = adaptive_chain_fisher(fixed, zline, vec1(0.3), 1);
    RMatrix j = classical_fisher(zline, z, vec1(0.3)).matrix;
    CHECK((res1.per_sample.matrix - j).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((res1.history_average.matrix - j).cwiseAbs().maxCoeff() <= 1e-12);

    ChainFisherResult res2 = adaptive_chain_fisher(fixed, zline, vec1(0.3), 2);
    CHECK((res2.per_sample.matrix - j).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK((res2.history_average.matrix - j).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("chain identity for a hand-built adaptive strategy") {
    StateModel zline = make_zline_model();
    Povm z = make_povm("z", 2);
    Povm x = make_povm("x", 2);
    // Second step measures sigma_z after "z+" and sigma_x after "z-".
    SequentialStrategy strategy{
        z, [z, x](int, const std::vector<std::string>& history) {
            return history.back() == "z+" ? z : x;
        }};
    ChainFisherResult res = adaptive_chain_fisher(strategy, zline, vec1(0.3), 2);
    CHECK(res.histories == 4);
    CHECK((res.per_sample.matrix - res.history_average.matrix).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("chain identity for randomized adaptive strategies") {
    RngStream rng(37, 0);
    for (int rep = 0; rep < 20; ++rep) {
        StateModel model = (rep % 2 == 0) ? make_model("qubit-bloch3")
                                          : make_model("qubit-rotation1");
        RVector theta = random_interior_point(model.domain(), rng);
        Povm first = random_povm(2, 2 + static_cast<int>(rng.next_u64() % 3), rng);
        // One fixed follow-up measurement per possible first outcome.
        auto table = std::make_shared<std::map<std::string, Povm>>();
        for (const auto& e : first.outcomes) {
            (*table)[e.label] = random_povm(2, 2 + static_cast<int>(rng.next_u64() % 3), rng);
        }
        SequentialStrategy strategy{
            first, [table](int, const std::vector<std::string>& history) {
                return table->at(history.back());
            }};
        ChainFisherResult res = adaptive_chain_fisher(strategy, model, theta, 2);
        CHECK((res.per_sample.matrix - res.history_average.matrix).cwiseAbs().maxCoeff() <=
              1e-9);
    }
}

TEST_CASE("chain capacity guard") {
    StateModel zline = make_zline_model();
    Povm p6 = make_povm("pauli6", 2);
    SequentialStrategy fixed = SequentialStrategy::fixed(p6);
    CHECK_THROWS_AS(adaptive_chain_fisher(fixed, zline, vec1(0.1), 3, 100), CapacityError);
}

TEST_SUITE_END();

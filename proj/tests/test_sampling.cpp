#include <doctest.h>

#include <algorithm>

#include "helpers.hpp"

using namespace qcrb;
using namespace qcrb::testing;

TEST_SUITE_BEGIN("sampling");

TEST_CASE("rng streams are reproducible and split cleanly") {
    RngStream a(42, 7), b(42, 7), c(42, 8);
    std::vector<std::uint64_t> seq_a, seq_b, seq_c;
    for (int i = 0; i < 64; ++i) {
        seq_a.push_back(a.next_u64());
        seq_b.push_back(b.next_u64());
        seq_c.push_back(c.next_u64());
    }
    CHECK(seq_a == seq_b);
    CHECK(seq_a != seq_c);

    // Adjacent streams are decorrelated.
    RngStream u(9, 0), v(9, 1);
    double sum_uv = 0.0, sum_u = 0.0, sum_v = 0.0, sum_u2 = 0.0, sum_v2 = 0.0;
    const int n = 4096;
    for (int i = 0; i < n; ++i) {
        double x = u.next_double(), y = v.next_double();
        sum_uv += x * y;
        sum_u += x;
        sum_v += y;
        sum_u2 += x * x;
        sum_v2 += y * y;
    }
    double cov = sum_uv / n - (sum_u / n) * (sum_v / n);
    double sx = std::sqrt(sum_u2 / n - (sum_u / n) * (sum_u / n));
    double sy = std::sqrt(sum_v2 / n - (sum_v / n) * (sum_v / n));
    CHECK(std::abs(cov / (sx * sy)) < 0.08);

    RngStream d(42, 7);
    for (int i = 0; i < 10; ++i) {
        double x = d.next_double();
        CHECK(x >= 0.0);
        CHECK(x < 1.0);
    }
}

TEST_CASE("sample_outcomes deterministic cases") {
    StateModel zline = make_zline_model(1.0);
    Povm z = make_povm("z", 2);

    RngStream rng(1, 0);
    std::vector<Sample> all_zero = sample_outcomes(zline, vec1(1.0), z, 200, rng);
    for (const Sample& s : all_zero) CHECK(s.outcome == 0);
    CHECK(all_zero.front().label(z) == "z+");

    std::vector<Sample> empty = sample_outcomes(zline, vec1(0.5), z, 0, rng);
    CHECK(empty.empty());
}

TEST_CASE("sample_outcomes matches the binomial frequency") {
    StateModel zline = make_zline_model();
    Povm z = make_povm("z", 2);
    RngStream rng(2024, 3);
    const long n = 100000;
    std::vector<Sample> samples = sample_outcomes(zline, vec1(0.5), z, n, rng);
    long zeros = 0;
    for (const Sample& s : samples) zeros += (s.outcome == 0);
    double freq = static_cast<double>(zeros) / n;
    // q(z+) = 0.75; the binomial 3-sigma band is +-0.0041.
    CHECK(std::abs(freq - 0.75) <= 0.005);
}

TEST_CASE("mle matches the closed-form binomial estimate") {
    StateModel zline = make_zline_model();
    Povm z = make_povm("z", 2);
    RngStream rng(5, 1);
    for (int rep = 0; rep < 10; ++rep) {
        double theta = rng.next_uniform(-0.8, 0.8);
        std::vector<Sample> samples = sample_outcomes(zline, vec1(theta), z, 400, rng);
        long zeros = 0;
        for (const Sample& s : samples) zeros += (s.outcome == 0);
        double closed_form = std::clamp(2.0 * zeros / 400.0 - 1.0, -0.95, 0.95);
        RVector est = mle(zline, z, samples, zline.domain());
        CHECK(est(0) == doctest::Approx(closed_form).epsilon(1e-6));
    }
}

TEST_CASE("mle clips to the domain boundary") {
    StateModel zline = make_zline_model(0.9);
    Povm z = make_povm("z", 2);
    std::vector<Sample> all_plus(50, Sample{0, 0});
    RVector est = mle(zline, z, all_plus, zline.domain());
    CHECK(est(0) == doctest::Approx(0.9));
}

TEST_CASE("mle error cases") {
    StateModel zline = make_zline_model();
    Povm z = make_povm("z", 2);
    CHECK_THROWS_AS(mle(zline, z, {}, zline.domain()), NoData);

    // The trivial measurement has a flat likelihood.
    Povm trivial = make_povm("trivial", 2);
    std::vector<Sample> flat(10, Sample{0, 0});
    CHECK_THROWS_AS(mle(zline, trivial, flat, zline.domain()), InfeasibleLikelihood);
}

TEST_CASE("mle is asymptotically efficient on the binomial family") {
    StateModel zline = make_zline_model();
    Povm z = make_povm("z", 2);
    const double theta = 0.5;
    const long n = 10000;
    const int trials = 2000;
    const double fisher = 1.0 / (1.0 - theta * theta);

    // Single seeded run stays within 5 sigma of the truth.
    {
        RngStream rng(77, 0);
        std::vector<Sample> samples = sample_outcomes(zline, vec1(theta), z, n, rng);
        RVector est = mle(zline, z, samples, zline.domain());
        CHECK(std::abs(est(0) - theta) <= 5.0 / std::sqrt(static_cast<double>(n) * fisher));
    }

    double sum = 0.0, sum_sq = 0.0;
    for (int t = 0; t < trials; ++t) {
        RngStream rng(78, static_cast<std::uint64_t>(t));
        std::vector<Sample> samples = sample_outcomes(zline, vec1(theta), z, n, rng);
        RVector est = mle(zline, z, samples, zline.domain());
        sum += est(0);
        sum_sq += est(0) * est(0);
    }
    double mean = sum / trials;
    double var = sum_sq / trials - mean * mean;
    CHECK(static_cast<double>(n) * var == doctest::Approx(1.0 / fisher).epsilon(0.10));
}

TEST_CASE("preliminary_estimate recovers deterministic distributions exactly") {
    StateModel zline = make_zline_model(1.0);
    Povm z = make_povm("z", 2);
    RngStream rng(6, 0);
    std::vector<Sample> samples = sample_outcomes(zline, vec1(1.0), z, 64, rng);
    RVector est = preliminary_estimate(zline, z, samples, zline.domain());
    CHECK(est(0) == doctest::Approx(1.0));
}

TEST_CASE("preliminary_estimate concentration on the Bloch model") {
    StateModel bloch = make_model("qubit-bloch3");
    Povm p6 = make_povm("pauli6", 2);
    RVector theta = vec3(0.15, -0.1, 0.2);

    // With 1000 first-stage samples the preliminary estimate lands within
    // 0.25 of the truth in at least 99% of runs (per-axis information is
    // about 1/3 per sample, so the error norm concentrates near 0.09).
    {
        int hits = 0;
        const int reps = 300;
        for (int t = 0; t < reps; ++t) {
            RngStream rng(91, static_cast<std::uint64_t>(t));
            std::vector<Sample> samples = sample_outcomes(bloch, theta, p6, 1000, rng);
            RVector est = preliminary_estimate(bloch, p6, samples, bloch.domain());
            if ((est - theta).norm() <= 0.25) ++hits;
        }
        CHECK(hits >= static_cast<int>(0.99 * reps));
    }

    // Regression fixture at 100 samples: materially lower hit rate for the
    // same radius (value frozen from a seeded calibration run).
    {
        int hits = 0;
        const int reps = 300;
        for (int t = 0; t < reps; ++t) {
            RngStream rng(92, static_cast<std::uint64_t>(t));
            std::vector<Sample> samples = sample_outcomes(bloch, theta, p6, 100, rng);
            RVector est = preliminary_estimate(bloch, p6, samples, bloch.domain());
            if ((est - theta).norm() <= 0.25) ++hits;
        }
        CHECK(hits == 127);  // frozen: seeded run, reps = 300
    }

    // The trivial measurement yields no usable likelihood.
    Povm trivial = make_povm("trivial", 2);
    std::vector<Sample> flat(16, Sample{0, 0});
    CHECK_THROWS_AS(preliminary_estimate(bloch, trivial, flat, bloch.domain()),
                    InfeasibleLikelihood);
}

TEST_CASE("unbiasedness diagnostics on closed-form estimators") {
    StateModel zline = make_zline_model();
    Povm z = make_povm("z", 2);
    const double theta = 0.3, h = 0.05;
    const int trials = 2000;
    const long n = 400;

    auto run_design = [&](double at, std::uint64_t seed_tag,
                          bool constant) -> std::vector<std::pair<RVector, RVector>> {
        std::vector<std::pair<RVector, RVector>> out;
        for (int t = 0; t < trials; ++t) {
            RngStream rng(seed_tag, static_cast<std::uint64_t>(t));
            std::vector<Sample> samples = sample_outcomes(zline, vec1(at), z, n, rng);
            long zeros = 0;
            for (const Sample& s : samples) zeros += (s.outcome == 0);
            double est = constant ? 0.11 : 2.0 * static_cast<double>(zeros) / n - 1.0;
            out.emplace_back(vec1(est), vec1(at));
        }
        return out;
    };

    // Sample-mean estimator: exactly unbiased, unit mean response.
    {
        std::vector<std::pair<RVector, RVector>> trials_all = run_design(theta, 101, false);
        auto plus = run_design(theta + h, 102, false);
        auto minus = run_design(theta - h, 103, false);
        trials_all.insert(trials_all.end(), plus.begin(), plus.end());
        trials_all.insert(trials_all.end(), minus.begin(), minus.end());
        UnbiasednessDiagnostics diag = asymptotic_unbiasedness_diag(trials_all, h);
        CHECK(std::abs(diag.bias(0)) <= 3.0 * diag.bias_se(0));
        CHECK(diag.jacobian(0, 0) == doctest::Approx(1.0).epsilon(0.05));
        CHECK(diag.trials_per_design == trials);
    }

    // Constant estimator: zero mean response.
    {
        std::vector<std::pair<RVector, RVector>> trials_all = run_design(theta, 104, true);
        auto plus = run_design(theta + h, 105, true);
        auto minus = run_design(theta - h, 106, true);
        trials_all.insert(trials_all.end(), plus.begin(), plus.end());
        trials_all.insert(trials_all.end(), minus.begin(), minus.end());
        UnbiasednessDiagnostics diag = asymptotic_unbiasedness_diag(trials_all, h);
        CHECK(diag.jacobian(0, 0) == doctest::Approx(0.0));
        CHECK(diag.bias(0) == doctest::Approx(0.11 - theta));
    }

    // Designs that do not form a stencil are rejected.
    std::vector<std::pair<RVector, RVector>> bad{{vec1(0.1), vec1(0.0)},
                                                 {vec1(0.2), vec1(0.07)}};
    CHECK_THROWS_AS(asymptotic_unbiasedness_diag(bad, h), DesignError);
}

TEST_SUITE_END();

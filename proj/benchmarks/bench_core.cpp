#include <benchmark/benchmark.h>

#include "qcrb/adaptive.hpp"
#include "qcrb/registry.hpp"

namespace {

using namespace qcrb;

RVector theta1() {
    RVector t(1);
    t(0) = 0.3;
    return t;
}

void BM_EigHerm4(benchmark::State& state) {
    CMatrix a = tensor(pauli_x(), pauli_y()) + 2.0 * identity(4);
    for (auto _ : state) {
        benchmark::DoNotOptimize(eig_herm(a));
    }
}
BENCHMARK(BM_EigHerm4);

void BM_ClassicalFisher(benchmark::State& state) {
    StateModel model = make_model("qubit-rotation1");
    Povm p = make_povm("pauli6", 2);
    RVector t = theta1();
    for (auto _ : state) {
        benchmark::DoNotOptimize(classical_fisher(model, p, t));
    }
}
BENCHMARK(BM_ClassicalFisher);

void BM_SldFisher(benchmark::State& state) {
    StateModel model = make_model("qubit-bloch3");
    RVector t(3);
    t << 0.15, -0.1, 0.2;
    for (auto _ : state) {
        benchmark::DoNotOptimize(sld_fisher(model, t));
    }
}
BENCHMARK(BM_SldFisher);

void BM_CrBoundRotation(benchmark::State& state) {
    StateModel model = make_model("qubit-rotation1");
    WeightMatrix g = WeightMatrix::identity(1);
    SolverOptions opts;
    opts.restarts = static_cast<int>(state.range(0));
    opts.max_evals = 1500;
    RVector t = theta1();
    for (auto _ : state) {
        benchmark::DoNotOptimize(cr_bound(model, t, g, opts));
    }
}
BENCHMARK(BM_CrBoundRotation)->Arg(1)->Arg(4);

void BM_TwoStageTrial(benchmark::State& state) {
    StateModel model = make_model("qubit-rotation1");
    WeightMatrix g = WeightMatrix::identity(1);
    SolverOptions opts;
    opts.restarts = 2;
    opts.max_evals = 1500;
    RVector t = theta1();
    BoundResult anchor = cr_bound(model, t, g, opts);
    AdaptiveStrategy strategy =
        solver_backed_strategy(model, g, make_povm("pauli6", 2), anchor, opts);
    std::uint64_t stream = 0;
    for (auto _ : state) {
        RngStream rng(42, stream++);
        benchmark::DoNotOptimize(two_stage_trial(model, t, strategy, state.range(0), rng));
    }
}
BENCHMARK(BM_TwoStageTrial)->Arg(256)->Arg(4096);

} // namespace

BENCHMARK_MAIN();

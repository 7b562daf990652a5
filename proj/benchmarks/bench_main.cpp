#include <benchmark/benchmark.h>

#include "fockforge/anomalysym.hpp"
#include "fockforge/frobenius.hpp"
#include "fockforge/quantize.hpp"
#include "fockforge/sampling.hpp"
#include "fockforge/stablegraphs.hpp"

using namespace fockforge;
using namespace fockforge::sampling;

namespace {

// Enumeration is memoized, so each (g, n) is timed once, cold.
void BM_EnumerateCold(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(enumerate_stable_graphs(static_cast<int>(state.range(0)), static_cast<int>(state.range(1))));
}
BENCHMARK(BM_EnumerateCold)->Args({2, 2})->Args({3, 0})->Args({3, 1})->Iterations(1)->Unit(benchmark::kMillisecond);

void BM_AutomorphismOrder(benchmark::State& state) {
    const auto& graphs = enumerate_stable_graphs(3, 0);
    for (auto _ : state)
        for (const auto& gw : graphs) benchmark::DoNotOptimize(automorphism_order(gw.graph));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(graphs.size()));
}
BENCHMARK(BM_AutomorphismOrder)->Unit(benchmark::kMillisecond);

void BM_GiventalPropagator(benchmark::State& state) {
    std::mt19937_64 rng(1);
    int cutoff = static_cast<int>(state.range(0));
    MatSeries r = random_unitary(rng, 3, 2 * cutoff + 1);
    for (auto _ : state) benchmark::DoNotOptimize(givental_propagator(r, Matrix::identity(3), cutoff));
}
BENCHMARK(BM_GiventalPropagator)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_PropagatorCrosscheck(benchmark::State& state) {
    std::mt19937_64 rng(1);
    int cutoff = static_cast<int>(state.range(0));
    MatSeries r = random_unitary(rng, 3, 2 * cutoff + 1);
    for (auto _ : state) benchmark::DoNotOptimize(propagator_crosscheck(r, Matrix::identity(3), cutoff));
}
BENCHMARK(BM_PropagatorCrosscheck)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_FeynmanTransform(benchmark::State& state) {
    std::mt19937_64 rng(2);
    int g_max = static_cast<int>(state.range(0));
    CorrelatorTable t = random_table(rng, 2, g_max, 0);
    Propagator d = random_propagator(rng, 2, 3 * g_max - 4 > 0 ? 3 * g_max - 4 : 1);
    for (auto _ : state) benchmark::DoNotOptimize(feynman_transform(t, d));
}
BENCHMARK(BM_FeynmanTransform)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_SolveR(benchmark::State& state) {
    std::mt19937_64 rng(3);
    std::vector<FieldElem> u{FieldElem(-2), FieldElem(1), FieldElem(4)};
    MatSeries v = random_v(rng, 3, 0);
    for (auto _ : state) benchmark::DoNotOptimize(solve_R(u, v, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_SolveR)->Arg(6)->Arg(12)->Unit(benchmark::kMillisecond);

void BM_AncestorP1(benchmark::State& state) {
    FrobeniusPoint p = p1_point();
    for (auto _ : state) benchmark::DoNotOptimize(abstract_ancestor(p, static_cast<int>(state.range(0)), 0));
}
BENCHMARK(BM_AncestorP1)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_VerifyAnomaly(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(verify_anomaly(static_cast<int>(state.range(0)), static_cast<int>(state.range(1))));
}
BENCHMARK(BM_VerifyAnomaly)->Args({0, 5})->Args({1, 3})->Args({2, 1})->Args({2, 3})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

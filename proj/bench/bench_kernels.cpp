// Parallel kernels against their serial references. Run with OMP_NUM_THREADS
// set to compare thread counts; the serial variants ignore it.

#include <benchmark/benchmark.h>

#include <map>

#include "ssp/exact_solver.hpp"
#include "ssp/montecarlo.hpp"
#include "ssp/rollout.hpp"
#include "ssp/scenarios.hpp"

using namespace ssp;

namespace {

const KernelSsp& kernel_model(std::size_t n) {
    static std::map<std::size_t, KernelSsp> cache;
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, random_proper_ssp(n, 4, 0.05, {0.0, 2.0}, 7)).first;
    return it->second;
}

const DisturbanceSsp& disturbance_model(std::size_t n) {
    static std::map<std::size_t, DisturbanceSsp> cache;
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, random_disturbance_ssp(n, 4, 4, {0.0, 2.0}, 7)).first;
    return it->second;
}

// Any bounded V exercises the kernels; solving for V* would dominate setup.
ValueFunction surrogate(const KernelSsp& m) {
    ValueFunction zero(m.n_states, 0.0);
    return noisy_surrogate(zero, m.terminal, 1.0, 3);
}

template <bool Parallel>
void bm_bellman(benchmark::State& state) {
    const KernelSsp& m = kernel_model(static_cast<std::size_t>(state.range(0)));
    const ValueFunction v = surrogate(m);
    for (auto _ : state) {
        if constexpr (Parallel) benchmark::DoNotOptimize(bellman_apply(m, v));
        else benchmark::DoNotOptimize(serial::bellman_apply(m, v));
    }
}

template <bool Parallel>
void bm_greedy(benchmark::State& state) {
    const KernelSsp& m = kernel_model(static_cast<std::size_t>(state.range(0)));
    const ValueFunction v = surrogate(m);
    for (auto _ : state) {
        if constexpr (Parallel) benchmark::DoNotOptimize(greedy_policy(m, v));
        else benchmark::DoNotOptimize(serial::greedy_policy(m, v));
    }
}

template <bool Parallel>
void bm_mismatch(benchmark::State& state) {
    const DisturbanceSsp& d = disturbance_model(static_cast<std::size_t>(state.range(0)));
    const ValueFunction v = surrogate(induce_kernel(d));
    for (auto _ : state) {
        if constexpr (Parallel) benchmark::DoNotOptimize(mismatch_delta(d, v));
        else benchmark::DoNotOptimize(serial::mismatch_delta(d, v));
    }
}

template <bool Parallel>
void bm_estimate(benchmark::State& state) {
    const SharpnessInstance s = sharpness_chain({10, 0.1});
    const StationaryPolicy pi = greedy_policy(s.model, s.surrogate).policy;
    const auto reps = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        if constexpr (Parallel) benchmark::DoNotOptimize(estimate(s.model, pi, StateId{0}, reps, 1));
        else benchmark::DoNotOptimize(serial::estimate(s.model, pi, StateId{0}, reps, 1));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(bm_bellman<true>)->Name("bellman/parallel")->Arg(1000)->Arg(5000);
BENCHMARK(bm_bellman<false>)->Name("bellman/serial")->Arg(1000)->Arg(5000);
BENCHMARK(bm_greedy<true>)->Name("greedy/parallel")->Arg(1000)->Arg(5000);
BENCHMARK(bm_greedy<false>)->Name("greedy/serial")->Arg(1000)->Arg(5000);
BENCHMARK(bm_mismatch<true>)->Name("mismatch/parallel")->Arg(1000)->Arg(5000);
BENCHMARK(bm_mismatch<false>)->Name("mismatch/serial")->Arg(1000)->Arg(5000);
BENCHMARK(bm_estimate<true>)->Name("estimate/parallel")->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_estimate<false>)->Name("estimate/serial")->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

// Serial reference kernels against their OpenMP counterparts.
//   bench_kernels --benchmark_filter=ValueIteration
// Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include "stopchain/birthdeath.hpp"
#include "stopchain/elimination.hpp"
#include "stopchain/intervention.hpp"
#include "stopchain/oracle.hpp"
#include "support/oracles.hpp"

using namespace stopchain;
namespace bd = stopchain::birthdeath;

namespace {

struct BigChain {
    Generator gen;
    PayoffVector payoff;
};

const BigChain& big_chain() {
    static const BigChain chain = [] {
        const bd::BirthDeathSpec spec{2.0, 1.0, 0.5, 2000};
        return BigChain{bd::build_generator(spec), bd::call_payoff(spec)};
    }();
    return chain;
}

const oracles::RandomInstance& twelve_states() {
    static const oracles::RandomInstance inst = [] {
        for (std::uint64_t seed = 1;; ++seed) {
            auto i = oracles::random_instance(seed);
            if (i.generator.size() == 12) {
                return i;
            }
        }
    }();
    return inst;
}

void ValueIterationParallel(benchmark::State& state) {
    const auto& c = big_chain();
    for (auto _ : state) {
        benchmark::DoNotOptimize(value_iteration(c.gen, c.payoff, 1e-8));
    }
}

void ValueIterationSerial(benchmark::State& state) {
    const auto& c = big_chain();
    for (auto _ : state) {
        benchmark::DoNotOptimize(reference::value_iteration(c.gen, c.payoff, 1e-8));
    }
}

void EnumerationParallel(benchmark::State& state) {
    const auto& c = twelve_states();
    for (auto _ : state) {
        benchmark::DoNotOptimize(enumerate_sets(c.generator, c.payoff));
    }
}

void EnumerationSerial(benchmark::State& state) {
    const auto& c = twelve_states();
    for (auto _ : state) {
        benchmark::DoNotOptimize(reference::enumerate_sets(c.generator, c.payoff));
    }
}

template <bool Parallel>
void MonteCarlo(benchmark::State& state) {
    const bd::BirthDeathSpec spec{2.0, 1.0, 0.5, 10};
    const Generator g = bd::build_generator(spec);
    const PayoffVector phi = bd::call_payoff(spec);
    const SolverReport rep = run(g, phi);
    const std::vector<StateIndex> starts{spec.index_of(0)};
    for (auto _ : state) {
        if constexpr (Parallel) {
            benchmark::DoNotOptimize(monte_carlo_value(g, phi, rep.final_stopping_set, starts, 20000, 1));
        } else {
            benchmark::DoNotOptimize(
                reference::monte_carlo_value(g, phi, rep.final_stopping_set, starts, 20000, 1));
        }
    }
}

template <bool Parallel>
void InterventionMonteCarlo(benchmark::State& state) {
    intervention::InterventionModel m{0.02, 0.3, 0.06, 1.0, 2.0, {}};
    m.grid = intervention::default_grid(m.b, m.r, m.strike, m.lambda, 2000);
    const std::vector<double> starts{1.5};
    for (auto _ : state) {
        if constexpr (Parallel) {
            benchmark::DoNotOptimize(intervention::monte_carlo_threshold_value(m, 2.7, starts, 20000, 1));
        } else {
            benchmark::DoNotOptimize(
                intervention::reference::monte_carlo_threshold_value(m, 2.7, starts, 20000, 1));
        }
    }
}

void EliminationBirthDeath(benchmark::State& state) {
    const auto& c = big_chain();
    for (auto _ : state) {
        benchmark::DoNotOptimize(run(c.gen, c.payoff));
    }
}

}  // namespace

BENCHMARK(ValueIterationParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(ValueIterationSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(EnumerationParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(EnumerationSerial)->Unit(benchmark::kMillisecond);
BENCHMARK_TEMPLATE(MonteCarlo, true)->Unit(benchmark::kMillisecond);
BENCHMARK_TEMPLATE(MonteCarlo, false)->Unit(benchmark::kMillisecond);
BENCHMARK_TEMPLATE(InterventionMonteCarlo, true)->Unit(benchmark::kMillisecond);
BENCHMARK_TEMPLATE(InterventionMonteCarlo, false)->Unit(benchmark::kMillisecond);
BENCHMARK(EliminationBirthDeath)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

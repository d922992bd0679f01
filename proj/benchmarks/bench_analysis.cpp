#include <benchmark/benchmark.h>

#include "csmakit/fairness.hpp"
#include "csmakit/markov.hpp"
#include "csmakit/mrp_delay.hpp"
#include "csmakit/mrp_zero.hpp"

using namespace csmakit;

static void BM_SolveRatesZeroDelay(benchmark::State& state) {
    const BackoffSchedule schedule = BackoffSchedule::default_80211b();
    const int n = static_cast<int>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_rates_zero_delay(schedule, n));
    }
}
BENCHMARK(BM_SolveRatesZeroDelay)->Arg(2)->Arg(5)->Arg(10);

static void BM_SolveRatesDelay(benchmark::State& state) {
    const BackoffSchedule schedule = BackoffSchedule::default_80211b();
    const int m = static_cast<int>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_rates_delay(schedule, m));
    }
}
BENCHMARK(BM_SolveRatesDelay)->Arg(0)->Arg(5)->Arg(10);

static void BM_TaggedCycleMatrix(benchmark::State& state) {
    const BackoffSchedule schedule = BackoffSchedule::default_80211b();
    const AttemptRates rates{0.05, 0.4, 0.1, 0.0};
    const int n = static_cast<int>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(tagged_cycle_matrix(rates, schedule, n));
    }
}
BENCHMARK(BM_TaggedCycleMatrix)->Arg(2)->Arg(10);

static void BM_StationaryDense(benchmark::State& state) {
    const int size = static_cast<int>(state.range(0));
    Eigen::MatrixXd P = Eigen::MatrixXd::Constant(size, size, 1e-3);
    for (int i = 0; i < size; ++i) {
        P(i, i) = 0.0;
        P(i, (i + 1) % size) = 1.0;
        P.row(i) /= P.row(i).sum();
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(stationary_distribution(P, 1e-10));
    }
}
BENCHMARK(BM_StationaryDense)->Arg(64)->Arg(256)->Arg(1024);

static void BM_ExpectedSuccessCounts(benchmark::State& state) {
    const AttemptRates rates{0.1, 0.8, 0.3, 0.0};
    const int frames = static_cast<int>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(expected_success_counts(rates, 10, frames));
    }
}
BENCHMARK(BM_ExpectedSuccessCounts)->Arg(100)->Arg(10000);

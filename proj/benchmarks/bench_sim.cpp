#include <benchmark/benchmark.h>

#include "csmakit/sim.hpp"

using namespace csmakit;

static void BM_CycleSimAligned(benchmark::State& state) {
    SimConfig config;
    config.n = static_cast<int>(state.range(0));
    config.cycles = 100000;
    for (auto _ : state) {
        benchmark::DoNotOptimize(run_sim(config));
    }
    state.SetItemsProcessed(state.iterations() * config.cycles);
}
BENCHMARK(BM_CycleSimAligned)->Arg(2)->Arg(10);

static void BM_CycleSimDelayed(benchmark::State& state) {
    SimConfig config;
    config.n = 2;
    config.cycles = 100000;
    config.timing.prop_delay_us = state.range(0) * config.timing.slot_us;
    config.timing.rx_prop_delay_us = config.timing.prop_delay_us;
    for (auto _ : state) {
        benchmark::DoNotOptimize(run_sim(config));
    }
    state.SetItemsProcessed(state.iterations() * config.cycles);
}
BENCHMARK(BM_CycleSimDelayed)->Arg(1)->Arg(10);

static void BM_SlotSim(benchmark::State& state) {
    const BackoffSchedule schedule = BackoffSchedule::default_80211b();
    for (auto _ : state) {
        SlotLevelSimulator sim(schedule, 3, 42);
        benchmark::DoNotOptimize(sim.run_cycles(10000));
    }
}
BENCHMARK(BM_SlotSim);

#include <clocksync/agents.hpp>
#include <clocksync/collectives.hpp>
#include <clocksync/netsim.hpp>

#include <benchmark/benchmark.h>

#include <vector>

using namespace clocksync;

namespace {

void BM_BroadcastSchedule(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(broadcast_schedule_recursive_doubling(n));
    }
}
BENCHMARK(BM_BroadcastSchedule)->Arg(8)->Arg(64)->Arg(512);

void BM_DoubledShiftSchedule(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(recursive_doubled_schedule(n, ReductionKind::CopyAll));
    }
}
BENCHMARK(BM_DoubledShiftSchedule)->Arg(8)->Arg(64)->Arg(512);

void BM_RingCopyAll(benchmark::State& state) {
    const std::vector<std::int64_t> values(static_cast<std::size_t>(state.range(0)), 42);
    for (auto _ : state) {
        benchmark::DoNotOptimize(ring_shift_copy_all(values));
    }
}
BENCHMARK(BM_RingCopyAll)->Arg(8)->Arg(64);

void BM_DistributedAverage(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const LatencyModel latency = LatencyModel::fixed(10'000'000);
    for (auto _ : state) {
        state.PauseTiming();
        std::vector<SimulatedClock> clocks;
        for (int i = 0; i < n; ++i) {
            clocks.emplace_back(i, i * kTicksPerSecond, 0.0, 0, static_cast<std::uint64_t>(i) + 1);
        }
        state.ResumeTiming();
        benchmark::DoNotOptimize(distributed_average(clocks, latency, {}, 1));
    }
}
BENCHMARK(BM_DistributedAverage)->Arg(8)->Arg(32)->Unit(benchmark::kMicrosecond);

void BM_ScenarioStep(benchmark::State& state) {
    ScenarioConfig cfg = scenario_preset('A');
    cfg.agent_count = static_cast<int>(state.range(0));
    World world(cfg);
    for (auto _ : state) {
        world.step();
    }
}
BENCHMARK(BM_ScenarioStep)->Arg(50)->Arg(100)->Arg(200)->Unit(benchmark::kMicrosecond);

void BM_ScenarioRun(benchmark::State& state) {
    ScenarioConfig cfg = scenario_preset('A');
    cfg.duration_seconds = 10.0;
    for (auto _ : state) {
        World world(cfg);
        benchmark::DoNotOptimize(world.run());
    }
}
BENCHMARK(BM_ScenarioRun)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

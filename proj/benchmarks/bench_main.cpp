#include <benchmark/benchmark.h>

#include <random>

#include "fleetreg/engine.hpp"
#include "fleetreg/reporting.hpp"
#include "fleetreg/scheduler.hpp"

using namespace fleetreg;

static void BM_LptPartition(benchmark::State& state) {
  std::mt19937 rng(1);
  std::uniform_int_distribution<int> dur(1, 1000);
  std::vector<Deciseconds> items;
  for (int i = 0; i < state.range(0); ++i) items.push_back(Deciseconds(dur(rng)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(lpt_partition(items, 8));
  }
}
BENCHMARK(BM_LptPartition)->Arg(64)->Arg(512)->Arg(4096);

static void BM_PlanBuiltin(benchmark::State& state) {
  Manifest m = builtin_bzl_manifest();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        plan(m, m.fleet_default, CampaignMode::normal, 8, PlanMode::model));
  }
}
BENCHMARK(BM_PlanBuiltin);

static void BM_ExecuteCampaign(benchmark::State& state) {
  Manifest m = builtin_bzl_manifest();
  SchedulePlan p = plan(m, m.fleet_default, CampaignMode::normal,
                        static_cast<int>(state.range(0)), PlanMode::replay);
  for (auto _ : state) {
    Fleet fleet(p.fleet);
    SimulatedRunner runner(0, 0.02);
    benchmark::DoNotOptimize(execute(p, fleet, runner));
  }
}
BENCHMARK(BM_ExecuteCampaign)->Arg(1)->Arg(8);

static void BM_AggregateReport(benchmark::State& state) {
  Manifest m = builtin_bzl_manifest();
  SchedulePlan p = plan(m, m.fleet_default, CampaignMode::normal, 8, PlanMode::replay);
  Fleet fleet(p.fleet);
  SimulatedRunner runner(0, 0.02);
  ExecutionTrace t = execute(p, fleet, runner);
  for (auto _ : state) {
    benchmark::DoNotOptimize(aggregate(t, m, p));
  }
}
BENCHMARK(BM_AggregateReport);

BENCHMARK_MAIN();

// Serial reference vs OpenMP for the two data-parallel kernels.
#include <benchmark/benchmark.h>

#include <random>

#include "nsnh/audit.hpp"
#include "nsnh/scenarios.hpp"

using namespace nsnh;

namespace {

struct PendulumRun {
  Scenario sc = build("spherical_pendulum", {});
  Trajectory traj;
  PendulumRun() {
    IntegratorOptions opts;
    traj = integrate(*sc.full, *sc.full_initial, 10.0, opts);
  }
};

const PendulumRun& pendulum() {
  static const PendulumRun run;
  return run;
}

void BM_SampleResiduals(benchmark::State& state) {
  const auto exec = state.range(0) ? Execution::parallel : Execution::serial;
  const auto& run = pendulum();
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_residuals(*run.sc.full, run.traj, exec));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(run.traj.samples.size()));
  state.SetLabel(state.range(0) ? "openmp" : "serial");
}
BENCHMARK(BM_SampleResiduals)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Ensemble(benchmark::State& state) {
  const auto exec = state.range(0) ? Execution::parallel : Execution::serial;
  const Scenario sc = build("rolling_disk", {});
  std::vector<PontryaginState> init;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int i = 0; i < 32; ++i) {
    PontryaginState s = *sc.full_initial;
    s.v *= 1.0 + 0.5 * U(rng);
    s.v(3) = U(rng);
    s.p = sc.full->lagrangian.dL_dv(s.q, s.v);
    init.push_back(s);
  }
  IntegratorOptions opts;
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_ensemble(*sc.full, init, 2.0, opts, exec));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(init.size()));
  state.SetLabel(state.range(0) ? "openmp" : "serial");
}
BENCHMARK(BM_Ensemble)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

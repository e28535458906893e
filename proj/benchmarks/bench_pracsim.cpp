#include <benchmark/benchmark.h>

#include "pracsim/attack.h"
#include "pracsim/security.h"
#include "pracsim/workloads.h"

using namespace pracsim;

namespace {

void BM_PrfmTrajectory(benchmark::State& state) {
  const PrfmParams p{state.range(0), 4};
  for (auto _ : state) benchmark::DoNotOptimize(prfm_trajectory(65'536, p, 1 << 20));
}
BENCHMARK(BM_PrfmTrajectory)->Arg(1)->Arg(8)->Arg(64);

void BM_PracVerdict(benchmark::State& state) {
  const auto t = preset("ddr5-3200an-prac");
  const PracParams p{state.range(0), 4, 1, 100};
  for (auto _ : state) benchmark::DoNotOptimize(is_secure_prac(1024, p, t));
}
BENCHMARK(BM_PracVerdict)->Arg(1)->Arg(64)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_SweepGrid(benchmark::State& state) {
  SweepGrid g;
  g.mechanism = Mechanism::Prac;
  g.thresholds = {1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024};
  g.bo_n_refs = {1, 2, 4};
  const auto t = preset("ddr5-3200an-prac");
  for (auto _ : state) benchmark::DoNotOptimize(sweep(g, t));
}
BENCHMARK(BM_SweepGrid)->Unit(benchmark::kMillisecond);

void BM_WaveAttack(benchmark::State& state) {
  AttackSpec spec;
  spec.target = PrfmConfig{{4, 4}};
  WaveSetup s;
  s.timing = preset("ddr5-3200an-base");
  s.n_rh = 1 << 20;
  s.b0 = state.range(0);
  for (auto _ : state) benchmark::DoNotOptimize(run_wave_attack(spec, s));
}
BENCHMARK(BM_WaveAttack)->Arg(8)->Arg(64)->Unit(benchmark::kMicrosecond);

void BM_FourCoreMix(benchmark::State& state) {
  const auto trace = gen_synthetic(Intensity::H, 1, 20'000);
  SystemConfig cfg;
  cfg.stop.instructions = 20'000;
  for (auto _ : state) benchmark::DoNotOptimize(run_cores({&trace, &trace, &trace, &trace}, cfg));
  state.SetItemsProcessed(state.iterations() * 4 * cfg.stop.instructions);
}
BENCHMARK(BM_FourCoreMix)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

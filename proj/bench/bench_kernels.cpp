// Serial reference vs OpenMP path for the three parallel kernels. Run with
// OMP_NUM_THREADS set to compare; both paths produce identical numbers.

#include "tnt/dynamics.hpp"
#include "tnt/husimi.hpp"
#include "tnt/optimizer.hpp"

#include <benchmark/benchmark.h>

using namespace tnt;

namespace {

Execution mode(const benchmark::State& state) {
  return state.range(0) == 0 ? Execution::serial : Execution::parallel;
}

StateVector twisted(int n, double t) {
  const SpinSystem sys(n);
  const Model model(HamiltonianSpec::twist_and_turn(sys, 2.0));
  return StateVector(sys, model.evolution().apply(t, initial_state(sys).amplitudes()));
}

void BM_Husimi(benchmark::State& state) {
  const StateVector psi = twisted(100, 0.0715);
  for (auto _ : state) {
    benchmark::DoNotOptimize(husimi_q(psi, {90, 180, true}, mode(state)).values.data());
  }
}
BENCHMARK(BM_Husimi)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

void BM_BasisSearch(benchmark::State& state) {
  const SpinSystem sys(100);
  ProtocolSpec spec;
  spec.hamiltonian = HamiltonianSpec::twist_and_turn(sys, 2.0);
  spec.t1 = 0.027;
  spec.readout = Readout::echo(0.027);
  const ProtocolRunner runner(Model(spec.hamiltonian), spec, initial_state(sys));
  const BasisOptimizer optimizer(sys, runner.generator_direction());
  const auto prepared = optimizer.prepare(runner.encode(kDefaultPhiEval));
  const NoiseKernel kernel(sys.dim(), 5.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(optimizer.optimize(prepared, kernel, {}, mode(state)).fc);
  }
}
BENCHMARK(BM_BasisSearch)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

void BM_NoiseSweep(benchmark::State& state) {
  SweepSettings settings;
  settings.asymmetric_ratios = {1.0, 1.5, 2.0};
  settings.exec = mode(state);
  const auto sigmas = linear_grid(0.0, 10.0, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(noise_sweep(settings, 0.027, sigmas).qcrb.data());
  }
}
BENCHMARK(BM_NoiseSweep)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

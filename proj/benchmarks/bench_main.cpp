#include <benchmark/benchmark.h>

#include <vector>

#include "imsynth/exo.hpp"
#include "imsynth/plant.hpp"
#include "imsynth/simkit.hpp"
#include "imsynth/synth.hpp"

using namespace imsynth;

namespace {

exo::HarmonicSet sixth_roots() {
  const std::vector<exo::Frequency> fs{exo::Frequency::parse("0"), exo::Frequency::parse("pi/3")};
  return exo::harmonic_closure(exo::eigenvalues_for(fs), exo::HarmonicPolicy::closure());
}

void BM_SynthesisFeasibility(benchmark::State& state) {
  const auto pl = plant::build_H(sixth_roots());
  for (auto _ : state) {
    auto sp = lmi::assemble_convex_synthesis(pl, 1.0, 10.0, 0.97, 1);
    benchmark::DoNotOptimize(lmi::solve_feasibility(sp.problem));
  }
}
BENCHMARK(BM_SynthesisFeasibility)->Unit(benchmark::kMillisecond);

void BM_OptimalRate(benchmark::State& state) {
  synth::RateQuery q;
  q.harmonics = sixth_roots();
  synth::SynthesisOptions opt;
  opt.recertify = false;
  for (auto _ : state) benchmark::DoNotOptimize(synth::bisect_optimal_rate(q, opt));
}
BENCHMARK(BM_OptimalRate)->Unit(benchmark::kMillisecond);

void BM_CertifyGradientDescent(benchmark::State& state) {
  const auto gd = simkit::baseline_method(simkit::Baseline::GradientDescent, 1.0, 10.0);
  for (auto _ : state) benchmark::DoNotOptimize(synth::certify_rate(gd, 1.0, 10.0, 1, 0.05, 0.9999, 1e-3));
}
BENCHMARK(BM_CertifyGradientDescent)->Unit(benchmark::kMillisecond);

void BM_SimulateLogistic(benchmark::State& state) {
  const auto obj = simkit::paper_logistic_instance();
  const auto tm = simkit::baseline_method(simkit::Baseline::TripleMomentum, obj.mu, obj.L);
  const int steps = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(simkit::run_method(tm, obj, steps));
  state.SetItemsProcessed(state.iterations() * steps);
}
BENCHMARK(BM_SimulateLogistic)->Arg(400)->Arg(4000);

}  // namespace

BENCHMARK_MAIN();

#include <benchmark/benchmark.h>

#include "kuramoto/model.hpp"
#include "kuramoto/particle.hpp"

using namespace kuramoto;

namespace {

OscillatorEnsemble make_state(int n) {
  OscillatorEnsemble s;
  s.disorder = sample_disorder(DisorderLaw::symmetric_pair(1.0), n, 1);
  s.angles = sample_initial(InitialLaw::uniform(), n, 2);
  return s;
}

// O(N) order-parameter route for the sine interaction drift.
void BM_SineDriftFastPath(benchmark::State& state) {
  const auto s = make_state(static_cast<int>(state.range(0)));
  const InteractionModel m = SineInteraction{4.0};
  for (auto _ : state) {
    auto drift = ensemble_drift(s, m);
    benchmark::DoNotOptimize(drift);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SineDriftFastPath)->RangeMultiplier(4)->Range(64, 16384)->Complexity();

// Direct pairwise evaluation of b[x_i, nu^N] for every particle: O(N^2).
void BM_SineDriftPairwise(benchmark::State& state) {
  const auto s = make_state(static_cast<int>(state.range(0)));
  const InteractionModel m = SineInteraction{4.0};
  const auto measure = EmpiricalSnapshot{0.0, s.angles, s.disorder}.measure();
  for (auto _ : state) {
    double acc = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
      acc += b_bracket_direct(m, s.angles[i], measure);
    benchmark::DoNotOptimize(acc);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SineDriftPairwise)->RangeMultiplier(4)->Range(64, 1024)->Complexity();

void BM_EulerMaruyamaStep(benchmark::State& state) {
  auto s = make_state(static_cast<int>(state.range(0)));
  const InteractionModel m = SineInteraction{4.0};
  const std::vector<double> g(s.size(), 0.1);
  for (auto _ : state) {
    s = step(s, m, 0.01, g);
    benchmark::DoNotOptimize(s.angles.data());
  }
}
BENCHMARK(BM_EulerMaruyamaStep)->Arg(600)->Arg(3200);

}  // namespace

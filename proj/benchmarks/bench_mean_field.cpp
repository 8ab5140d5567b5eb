#include <benchmark/benchmark.h>

#include "kuramoto/mean_field.hpp"

using namespace kuramoto;

namespace {

void BM_MvRhs(benchmark::State& state) {
  const int M = static_cast<int>(state.range(0));
  const DisorderLaw mu = DisorderLaw::symmetric_pair(1.0);
  const auto P = initial_solution(InitialLaw::von_mises(0.5, Angle(0.0)), mu, M);
  const CoeffBlock block = P.coeffs.front();
  const InteractionModel m = SineInteraction{6.0};
  for (auto _ : state) {
    auto rhs = mv_rhs(block, m, mu);
    benchmark::DoNotOptimize(rhs);
  }
}
BENCHMARK(BM_MvRhs)->Arg(32)->Arg(64)->Arg(128);

void BM_StationaryProfile(benchmark::State& state) {
  const InteractionModel m = SineInteraction{6.0};
  for (auto _ : state) {
    auto prof = stationary_profile(1.0, 0.6, Angle(0.0), m, 512);
    benchmark::DoNotOptimize(prof.density);
  }
}
BENCHMARK(BM_StationaryProfile);

void BM_PsiMap(benchmark::State& state) {
  const DisorderLaw mu = DisorderLaw::symmetric_pair(1.0);
  for (auto _ : state) {
    const double v = psi_map(6.0, mu, 0.5);
    benchmark::DoNotOptimize(v);
  }
}
BENCHMARK(BM_PsiMap);

}  // namespace

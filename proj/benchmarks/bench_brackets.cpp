#include <benchmark/benchmark.h>

#include "nambu/constraints.hpp"
#include "nambu/systems.hpp"

using namespace nambu;

static void BM_poisson(benchmark::State& state) {
  MotionSystem ho = builtin("harmonic-oscillator");
  Binding pt = sample(ho, 1, 1).front().phase;
  for (auto _ : state)
    benchmark::DoNotOptimize(poisson(ho.family.members[1],
                                     ho.family.members[3], pt,
                                     ho.phase_space));
}
BENCHMARK(BM_poisson);

static void BM_nambu_4x4(benchmark::State& state) {
  MotionSystem ho = builtin("harmonic-oscillator");
  Binding pt = sample(ho, 1, 1).front().phase;
  std::vector<Observable> fs{ho.family.members[0], ho.family.members[1],
                             ho.family.members[3], ho.family.members[4]};
  for (auto _ : state)
    benchmark::DoNotOptimize(nambu_bracket(fs, pt, ho.phase_space));
}
BENCHMARK(BM_nambu_4x4);

static void BM_nambu_8x8_sphere(benchmark::State& state) {
  MotionSystem s4 = builtin("sphere-4");
  Binding pt = sample(s4, 1, 1).front().phase;
  std::vector<Observable> fs(s4.family.members.begin(),
                             s4.family.members.begin() + 8);
  for (auto _ : state)
    benchmark::DoNotOptimize(nambu_bracket(fs, pt, s4.phase_space));
}
BENCHMARK(BM_nambu_8x8_sphere);

static void BM_decomposed_4bracket(benchmark::State& state) {
  MotionSystem kc = builtin("kepler-coulomb");
  Binding pt = sample(kc, 1, 1).front().phase;
  std::vector<Observable> fs{kc.family.members[1], kc.family.members[2],
                             kc.family.members[3], kc.family.members[4]};
  for (auto _ : state)
    benchmark::DoNotOptimize(decomposed_bracket(fs, pt, kc.phase_space));
}
BENCHMARK(BM_decomposed_4bracket);

static void BM_normalization_sphere(benchmark::State& state) {
  MotionSystem s4 = builtin("sphere-4");
  SamplePoint pt = sample(s4, 1, 1).front();
  const ConstraintSet& cs = s4.constraint_set();
  IndexSelection sel = IndexSelection::make({1, 2, 3, 4, 5, 6, 7}, 11);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        normalization_constant(s4.family, cs, sel, pt.constants));
}
BENCHMARK(BM_normalization_sphere);

static void BM_sample_winternitz(benchmark::State& state) {
  MotionSystem w3 = builtin("winternitz-3");
  std::uint64_t seed = 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(sample(w3, ++seed, 10));
}
BENCHMARK(BM_sample_winternitz);

BENCHMARK_MAIN();

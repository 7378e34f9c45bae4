#include <benchmark/benchmark.h>

#include "qfigeo/discontinuity.hpp"
#include "qfigeo/family.hpp"
#include "qfigeo/metrology.hpp"

using namespace qfigeo;

namespace {

RealVector pt1(double x) { return (RealVector(1) << x).finished(); }
RealVector pt2(double x, double y) { return (RealVector(2) << x, y).finished(); }

void bm_eigh(benchmark::State& state) {
  const Eigen::Index dim = state.range(0);
  const StateFamily fam = make_random_full_rank(dim, 1);
  const ComplexMatrix rho = fam.evaluate(pt2(0.2, -0.3)).matrix();
  for (auto _ : state) {
    benchmark::DoNotOptimize(eigh(rho));
  }
}
BENCHMARK(bm_eigh)->Arg(4)->Arg(8)->Arg(16)->Arg(32);

void bm_bundle_analytic(benchmark::State& state) {
  const StateFamily fam = builtin_family("example2");
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluate_bundle(fam, pt2(0.3, -0.4)));
  }
}
BENCHMARK(bm_bundle_analytic);

void bm_bundle_finite_difference(benchmark::State& state) {
  const StateFamily analytic = builtin_family("example2");
  const StateFamily fam("fd", analytic.dim(), analytic.n_params(), analytic.domain(),
                        analytic.smoothness(),
                        [analytic](const RealVector& p) { return analytic.evaluate_raw(p); });
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluate_bundle(fam, pt2(0.3, -0.4)));
  }
}
BENCHMARK(bm_bundle_finite_difference);

void bm_qfi_pipeline(benchmark::State& state) {
  const StateFamily fam = make_random_full_rank(state.range(0), 5);
  const DerivativeBundle bundle = evaluate_bundle(fam, pt2(0.25, -0.15));
  for (auto _ : state) {
    benchmark::DoNotOptimize(qfi_spectral(bundle));
    benchmark::DoNotOptimize(continuous_qfi(bundle));
  }
}
BENCHMARK(bm_qfi_pipeline)->Arg(4)->Arg(16);

void bm_fidelity(benchmark::State& state) {
  const StateFamily fam = make_random_full_rank(state.range(0), 9);
  const DensityMatrix a = fam.evaluate(pt2(0.1, 0.1));
  const DensityMatrix b = fam.evaluate(pt2(0.12, 0.1));
  for (auto _ : state) {
    benchmark::DoNotOptimize(uhlmann_fidelity(a, b));
  }
}
BENCHMARK(bm_fidelity)->Arg(4)->Arg(16);

void bm_numeric_metric(benchmark::State& state) {
  const StateFamily fam = builtin_family("example2");
  for (auto _ : state) {
    benchmark::DoNotOptimize(numeric_bures_metric(fam, pt2(0.0, 0.0)));
  }
}
BENCHMARK(bm_numeric_metric);

void bm_jump(benchmark::State& state) {
  const StateFamily fam = make_random_rank_deficient(4, 11);
  const DerivativeBundle bundle = evaluate_bundle(fam, pt2(0.0, 0.0));
  const DirectionVector u = DirectionVector::unit(pt2(0.8, 0.6));
  for (auto _ : state) {
    benchmark::DoNotOptimize(jump(bundle, u));
  }
}
BENCHMARK(bm_jump);

}  // namespace

BENCHMARK_MAIN();

// OpenMP kernels against their serial references. Thread count comes from
// OMP_NUM_THREADS; on one core the two columns should match.
#include <benchmark/benchmark.h>
#include <omp.h>

#include <numbers>
#include <vector>

#include "slecut/density.hpp"
#include "slecut/ensemble.hpp"
#include "slecut/mc.hpp"

using namespace slecut;
using std::numbers::pi;

namespace {

std::vector<double> axis(int n) {
  std::vector<double> a;
  for (int i = 0; i < n; ++i) a.push_back((i + 0.5) * pi / n);
  return a;
}

const density::DensityModel& model() {
  static const density::DensityModel m(6.0, 30);
  return m;
}

void BM_density_grid(benchmark::State& st) {
  const auto ax = axis(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(density::density_grid(model(), 0.5, {1.0, 2.0}, ax, ax));
}
void BM_density_grid_serial(benchmark::State& st) {
  const auto ax = axis(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(density::density_grid_serial(model(), 0.5, {1.0, 2.0}, ax, ax));
}

const std::vector<double> kTimes{0.5, 1.0};

void BM_simulate_Z(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0));
  for (auto _ : st)
    benchmark::DoNotOptimize(ensemble::simulate_Z_times(6, {pi / 2, pi / 2}, kTimes, n, ensemble::ZLaw::C, Seed{1}));
}
void BM_simulate_Z_serial(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0));
  for (auto _ : st)
    benchmark::DoNotOptimize(
        ensemble::simulate_Z_times_serial(6, {pi / 2, pi / 2}, kTimes, n, ensemble::ZLaw::C, Seed{1}));
}

mc::McPlan plan(std::size_t n) {
  mc::McPlan p;
  p.kappa = 6;
  p.radii = {0.4, 0.3, 0.2};
  p.n_paths = n;
  p.seed = 7;
  p.workers = omp_get_max_threads();
  return p;
}

void BM_estimate_P(benchmark::State& st) {
  auto p = plan(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(mc::estimate_P(p));
}
void BM_estimate_P_serial(benchmark::State& st) {
  const auto p = plan(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(mc::estimate_P_serial(p));
}

}  // namespace

BENCHMARK(BM_density_grid)->Arg(40)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_density_grid_serial)->Arg(40)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_simulate_Z)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_simulate_Z_serial)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_estimate_P)->Arg(100)->Unit(benchmark::kMillisecond)->Iterations(1);
BENCHMARK(BM_estimate_P_serial)->Arg(100)->Unit(benchmark::kMillisecond)->Iterations(1);

BENCHMARK_MAIN();

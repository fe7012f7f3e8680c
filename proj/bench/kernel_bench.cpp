// OpenMP stencil kernels against the serial reference on the cavity grid.

#include "adrom/kernels.hpp"

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

namespace {

using namespace adrom;
namespace k = adrom::kernels;

std::vector<double> random_field(std::size_t n) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> d;
  std::vector<double> v(n);
  for (double &x : v)
    x = d(rng);
  return v;
}

Grid grid_of(const benchmark::State &s) {
  return Grid(static_cast<int>(s.range(0)), static_cast<int>(s.range(0)));
}

void BM_momentum_parallel(benchmark::State &s) {
  const Grid g = grid_of(s);
  const auto vel = random_field(g.size());
  std::vector<double> out(g.size());
  k::PaddedVelocity pv(g);
  for (auto _ : s) {
    pv.fill(vel, 1.0);
    k::momentum(g, 1.0 / 8300, pv, out);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_momentum_serial(benchmark::State &s) {
  const Grid g = grid_of(s);
  const auto vel = random_field(g.size());
  std::vector<double> out(g.size());
  for (auto _ : s) {
    k::serial::momentum(g, 1.0 / 8300, 1.0, vel, out);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_divergence_parallel(benchmark::State &s) {
  const Grid g = grid_of(s);
  const auto vel = random_field(g.size());
  std::vector<double> div(g.cells());
  for (auto _ : s) {
    k::divergence(g, vel, div);
    benchmark::DoNotOptimize(div.data());
  }
}

void BM_divergence_serial(benchmark::State &s) {
  const Grid g = grid_of(s);
  const auto vel = random_field(g.size());
  std::vector<double> div(g.cells());
  for (auto _ : s) {
    k::serial::divergence(g, vel, div);
    benchmark::DoNotOptimize(div.data());
  }
}

void BM_gradient_parallel(benchmark::State &s) {
  const Grid g = grid_of(s);
  const auto p = random_field(g.cells());
  auto vel = random_field(g.size());
  for (auto _ : s) {
    k::subtract_gradient(g, p, 1e-9, vel);
    benchmark::DoNotOptimize(vel.data());
  }
}

void BM_gradient_serial(benchmark::State &s) {
  const Grid g = grid_of(s);
  const auto p = random_field(g.cells());
  auto vel = random_field(g.size());
  for (auto _ : s) {
    k::serial::subtract_gradient(g, p, 1e-9, vel);
    benchmark::DoNotOptimize(vel.data());
  }
}

void BM_vorticity_parallel(benchmark::State &s) {
  const Grid g = grid_of(s);
  const auto vel = random_field(g.size());
  std::vector<double> w(g.cells());
  k::PaddedVelocity pv(g);
  for (auto _ : s) {
    pv.fill(vel, 1.0);
    k::vorticity(g, pv, w);
    benchmark::DoNotOptimize(w.data());
  }
}

void BM_vorticity_serial(benchmark::State &s) {
  const Grid g = grid_of(s);
  const auto vel = random_field(g.size());
  std::vector<double> w(g.cells());
  for (auto _ : s) {
    k::serial::vorticity(g, 1.0, vel, w);
    benchmark::DoNotOptimize(w.data());
  }
}

} // namespace

#define SIZES Arg(64)->Arg(100)->Arg(256)
BENCHMARK(BM_momentum_parallel)->SIZES;
BENCHMARK(BM_momentum_serial)->SIZES;
BENCHMARK(BM_divergence_parallel)->SIZES;
BENCHMARK(BM_divergence_serial)->SIZES;
BENCHMARK(BM_gradient_parallel)->SIZES;
BENCHMARK(BM_gradient_serial)->SIZES;
BENCHMARK(BM_vorticity_parallel)->SIZES;
BENCHMARK(BM_vorticity_serial)->SIZES;

BENCHMARK_MAIN();

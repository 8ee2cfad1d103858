// Serial reference vs OpenMP timing for the three data-parallel kernels.
// The thread count for the OpenMP variants is the benchmark argument.

#include <cmath>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "trajcurate/kernels.hpp"
#include "trajcurate/tinynn.hpp"

namespace {

using namespace trajcurate;
using namespace trajcurate::kernels;

std::vector<double> gaussian(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

struct AssignData {
  static constexpr std::size_t n = 20000, k = 64, dim = 48;
  std::vector<double> points = gaussian(n * dim, 1), cents = gaussian(k * dim, 2);
  std::vector<std::uint32_t> assign = std::vector<std::uint32_t>(n);
  std::vector<double> dist2 = std::vector<double>(n);
};

struct CosineData {
  static constexpr std::size_t n = 6000, dim = 48, groups = 30;
  std::vector<double> rows = gaussian(n * dim, 3);
  std::vector<std::vector<std::size_t>> members;
  std::vector<double> out = std::vector<double>(n);
  CosineData() {
    members.resize(groups);
    for (std::size_t i = 0; i < n; ++i) members[i % groups].push_back(i);
    for (std::size_t r = 0; r < n; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < dim; ++c) s += rows[r * dim + c] * rows[r * dim + c];
      s = std::sqrt(s);
      for (std::size_t c = 0; c < dim; ++c) rows[r * dim + c] /= s;
    }
  }
};

struct MlpData {
  static constexpr std::size_t n = 20000, dim = 32;
  nn::MlpClassifier model = nn::init({dim, 64, 64, 5}, 4);
  std::vector<double> inputs = gaussian(n * dim, 5);
  std::vector<double> out = std::vector<double>(n * 5);
};

void BM_AssignNearestSerial(benchmark::State& state) {
  AssignData d;
  for (auto _ : state) {
    assign_nearest_serial({d.points.data(), d.n, d.dim}, {d.cents.data(), d.k, d.dim}, d.assign, d.dist2);
    benchmark::DoNotOptimize(d.dist2.data());
  }
}

void BM_AssignNearestOmp(benchmark::State& state) {
  AssignData d;
  const int threads = static_cast<int>(state.range(0));
  for (auto _ : state) {
    assign_nearest_omp({d.points.data(), d.n, d.dim}, {d.cents.data(), d.k, d.dim}, d.assign, d.dist2, threads);
    benchmark::DoNotOptimize(d.dist2.data());
  }
}

void BM_MaxCosineSerial(benchmark::State& state) {
  CosineData d;
  for (auto _ : state) {
    max_cosine_in_groups_serial({d.rows.data(), d.n, d.dim}, d.members, d.out);
    benchmark::DoNotOptimize(d.out.data());
  }
}

void BM_MaxCosineOmp(benchmark::State& state) {
  CosineData d;
  const int threads = static_cast<int>(state.range(0));
  for (auto _ : state) {
    max_cosine_in_groups_omp({d.rows.data(), d.n, d.dim}, d.members, d.out, threads);
    benchmark::DoNotOptimize(d.out.data());
  }
}

void BM_MlpProbsSerial(benchmark::State& state) {
  MlpData d;
  for (auto _ : state) {
    mlp_probs_serial(d.model, {d.inputs.data(), d.n, d.dim}, d.out);
    benchmark::DoNotOptimize(d.out.data());
  }
}

void BM_MlpProbsOmp(benchmark::State& state) {
  MlpData d;
  const int threads = static_cast<int>(state.range(0));
  for (auto _ : state) {
    mlp_probs_omp(d.model, {d.inputs.data(), d.n, d.dim}, d.out, threads);
    benchmark::DoNotOptimize(d.out.data());
  }
}

}  // namespace

BENCHMARK(BM_AssignNearestSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AssignNearestOmp)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MaxCosineSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MaxCosineOmp)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MlpProbsSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MlpProbsOmp)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

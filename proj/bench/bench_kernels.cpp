// Serial reference kernels against their OpenMP counterparts.
// Args: {sample count, bond dimension}.

#include "umps/kernels.hpp"
#include "umps/sampling.hpp"

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

using namespace umps;

namespace {

constexpr std::size_t kSites = 16;

std::vector<std::uint8_t> random_bits(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::uint8_t> bits(n);
  for (auto &b : bits) b = static_cast<std::uint8_t>(rng() & 1U);
  return bits;
}

// Mid-chain site so both bonds are at full rank.
constexpr std::size_t kSite = kSites / 2;

void BM_ExtendLeft(benchmark::State &state, ExecPolicy policy) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto r = static_cast<std::size_t>(state.range(1));
  const Mps m = random_init(kSites, r, 1);
  const MpsCore &core = m.core(kSite);
  const Matrix env = Matrix::Random(core.tensor().dims()[0], static_cast<Eigen::Index>(n));
  const auto bits = random_bits(n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(extend_left(env, core, bits, policy));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

void BM_WindowStats(benchmark::State &state, ExecPolicy policy) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto r = static_cast<std::size_t>(state.range(1));
  const Mps m = random_init(kSites, r, 3);
  const MergedCore merged = merge(m, kSite);
  const auto &dims = merged.tensor.dims();
  const auto cols = static_cast<Eigen::Index>(n);
  // Positive environments and tensor keep every psi away from the floor.
  const Matrix left = Matrix::Random(dims[0], cols).array().abs() + 0.1;
  const Matrix right = Matrix::Random(dims[3], cols).array().abs() + 0.1;
  DenseTensor a = merged.tensor;
  for (double &x : a.data()) x = std::abs(x) + 0.1;
  const auto bk = random_bits(n, 4);
  const auto bk1 = random_bits(n, 5);
  for (auto _ : state)
    benchmark::DoNotOptimize(window_stats(left, right, a, bk, bk1, true, policy));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

void BM_Sample(benchmark::State &state, ExecPolicy policy) {
  const Mps m = random_init(kSites, static_cast<std::size_t>(state.range(1)), 6);
  SampleRequest req;
  req.count = static_cast<std::size_t>(state.range(0));
  req.seed = 7;
  for (auto _ : state) benchmark::DoNotOptimize(sample(m, req, policy));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void shapes(benchmark::internal::Benchmark *b) {
  for (std::int64_t n : {1024, 16384})
    for (std::int64_t r : {4, 16}) b->Args({n, r});
  b->Unit(benchmark::kMicrosecond)->UseRealTime();
}

}  // namespace

BENCHMARK_CAPTURE(BM_ExtendLeft, serial, ExecPolicy::Serial)->Apply(shapes);
BENCHMARK_CAPTURE(BM_ExtendLeft, parallel, ExecPolicy::Parallel)->Apply(shapes);
BENCHMARK_CAPTURE(BM_WindowStats, serial, ExecPolicy::Serial)->Apply(shapes);
BENCHMARK_CAPTURE(BM_WindowStats, parallel, ExecPolicy::Parallel)->Apply(shapes);
BENCHMARK_CAPTURE(BM_Sample, serial, ExecPolicy::Serial)->Apply(shapes);
BENCHMARK_CAPTURE(BM_Sample, parallel, ExecPolicy::Parallel)->Apply(shapes);

BENCHMARK_MAIN();

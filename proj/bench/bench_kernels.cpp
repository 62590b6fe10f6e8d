#include <random>

#include <benchmark/benchmark.h>

#include "tfa/attention.hpp"
#include "tfa/matrix.hpp"

namespace {

tfa::Matrix random_matrix(std::size_t r, std::size_t c, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  tfa::Matrix m(r, c);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

tfa::SelfAttentionLayer random_attention(std::size_t d, std::size_t H, std::size_t S) {
  std::vector<tfa::AttentionHead> heads;
  for (std::size_t h = 0; h < H; ++h)
    heads.push_back({random_matrix(d, S, 4 * h) * 0.1, random_matrix(S, d, 4 * h + 1) * 0.1,
                     random_matrix(S, d, 4 * h + 2) * 0.1, random_matrix(S, d, 4 * h + 3) * 0.1});
  return tfa::SelfAttentionLayer(std::move(heads));
}

void BM_MatmulSerial(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0));
  const tfa::Matrix A = random_matrix(n, n, 1), B = random_matrix(n, n, 2);
  for (auto _ : st) benchmark::DoNotOptimize(tfa::matmul_serial(A, B));
}

void BM_MatmulParallel(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0));
  const tfa::Matrix A = random_matrix(n, n, 1), B = random_matrix(n, n, 2);
  for (auto _ : st) benchmark::DoNotOptimize(tfa::matmul_parallel(A, B));
}

void BM_AttentionSerial(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0));
  const tfa::SelfAttentionLayer a = random_attention(16, 4, 8);
  const tfa::Matrix X = random_matrix(16, n, 9);
  for (auto _ : st) benchmark::DoNotOptimize(a.eval_serial(X));
}

void BM_AttentionParallel(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0));
  const tfa::SelfAttentionLayer a = random_attention(16, 4, 8);
  const tfa::Matrix X = random_matrix(16, n, 9);
  for (auto _ : st) benchmark::DoNotOptimize(a.eval_parallel(X));
}

}  // namespace

BENCHMARK(BM_MatmulSerial)->Arg(64)->Arg(256)->Arg(512);
BENCHMARK(BM_MatmulParallel)->Arg(64)->Arg(256)->Arg(512);
BENCHMARK(BM_AttentionSerial)->Arg(32)->Arg(128)->Arg(512);
BENCHMARK(BM_AttentionParallel)->Arg(32)->Arg(128)->Arg(512);

BENCHMARK_MAIN();

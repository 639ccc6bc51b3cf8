#include <benchmark/benchmark.h>

#include <random>

#include "coldrec/kernels.hpp"

using namespace coldrec;

namespace {

std::vector<std::string> texts(std::size_t n) {
  const std::vector<std::string> words{"star", "night", "river", "echo", "paper", "moon", "glass", "iron",
                                       "road", "blue",  "heart", "storm", "garden", "ghost", "city", "tiger"};
  std::mt19937_64 rng(1);
  std::vector<std::string> out(n);
  for (auto& t : out)
    for (int w = 0; w < 24; ++w) t += words[rng() % words.size()] + " ";
  return out;
}

std::vector<embed::PoolEntry> pool(std::size_t n) {
  const auto t = texts(n);
  std::vector<embed::PoolEntry> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({"u" + std::to_string(i), embed::hashed_embedding(t[i]), {}});
  return out;
}

void BM_EmbedSerial(benchmark::State& state) {
  const auto t = texts(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::reference::hashed_embed_batch(t, 256));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_EmbedParallel(benchmark::State& state) {
  const auto t = texts(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::hashed_embed_batch(t, 256));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ScorePoolSerial(benchmark::State& state) {
  const auto p = pool(state.range(0));
  const auto target = embed::hashed_embedding("ghost city storm");
  for (auto _ : state) benchmark::DoNotOptimize(kernels::reference::score_pool(target, p));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ScorePoolParallel(benchmark::State& state) {
  const auto p = pool(state.range(0));
  const auto target = embed::hashed_embedding("ghost city storm");
  for (auto _ : state) benchmark::DoNotOptimize(kernels::score_pool(target, p));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_EmbedSerial)->Arg(1000)->Arg(10000);
BENCHMARK(BM_EmbedParallel)->Arg(1000)->Arg(10000);
BENCHMARK(BM_ScorePoolSerial)->Arg(1000)->Arg(20000);
BENCHMARK(BM_ScorePoolParallel)->Arg(1000)->Arg(20000);

BENCHMARK_MAIN();

// Copyright 2026 The xmodal Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <random>

#include "xmodal/image_encoder.hpp"
#include "xmodal/ops.hpp"
#include "xmodal/recipe_encoder.hpp"
#include "xmodal/retrieval.hpp"
#include "xmodal/transformer.hpp"

using namespace xmodal;

namespace {

Tensor random_tensor(Shape shape, std::mt19937_64& rng, bool requires_grad = false) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = u(rng);
  return Tensor::from(std::move(shape), std::move(v), requires_grad);
}

TokenIds random_ids(std::size_t n, std::size_t vocab, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::int32_t> u(0, static_cast<std::int32_t>(vocab) - 1);
  TokenIds ids(n);
  for (auto& id : ids) id = u(rng);
  return ids;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  const Tensor a = random_tensor({n, n}, rng), b = random_tensor({n, n}, rng);
  NoGradGuard ng;
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(16)->Arg(64)->Arg(128);

void BM_MatmulBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(2);
  Tensor a = random_tensor({n, n}, rng, true), b = random_tensor({n, n}, rng, true);
  for (auto _ : state) {
    a.zero_grad();
    b.zero_grad();
    sum(matmul(a, b)).backward();
  }
}
BENCHMARK(BM_MatmulBackward)->Arg(16)->Arg(64);

void BM_Attention(benchmark::State& state) {
  const auto lq = static_cast<std::size_t>(state.range(0));
  const auto lkv = static_cast<std::size_t>(state.range(1));
  std::mt19937_64 rng(3);
  const MultiHeadAttention mha(AttentionConfig{4, 64, 128, 1, 0.0}, rng);
  const TokenSequence q{random_tensor({lq, 64}, rng)}, kv{random_tensor({lkv, 64}, rng)};
  NoGradGuard ng;
  for (auto _ : state) benchmark::DoNotOptimize(mha.forward(q, kv, {}));
}
BENCHMARK(BM_Attention)->Args({1, 24})->Args({12, 12})->Args({25, 16})->Args({41, 41});

void BM_RecipeEncoder(benchmark::State& state) {
  RecipeEncoderConfig cfg;
  cfg.vocab_size = 200;
  cfg.htd_mode = static_cast<HtdMode>(state.range(0));
  std::mt19937_64 rng(4);
  const RecipeEncoder enc(cfg, rng);
  RecipeSample s;
  s.title = random_ids(5, 200, rng);
  for (int i = 0; i < 8; ++i) s.ingredients.push_back(random_ids(4, 200, rng));
  for (int i = 0; i < 8; ++i) s.instructions.push_back(random_ids(7, 200, rng));
  NoGradGuard ng;
  for (auto _ : state) benchmark::DoNotOptimize(enc.encode(s, {}));
}
BENCHMARK(BM_RecipeEncoder)->Arg(static_cast<int>(HtdMode::full))->Arg(static_cast<int>(HtdMode::none));

void BM_ImageEncoder(benchmark::State& state) {
  std::mt19937_64 rng(5);
  const ImageEncoder enc(ImageEncoderConfig{}, rng);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> px(32 * 32 * 3);
  for (double& v : px) v = u(rng);
  const ImageSample img{Tensor::from({32, 32, 3}, std::move(px))};
  NoGradGuard ng;
  for (auto _ : state) benchmark::DoNotOptimize(enc.encode(img, {}));
}
BENCHMARK(BM_ImageEncoder);

void BM_RankMatrix(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(6);
  const Tensor q = l2_normalize_rows(random_tensor({n, 64}, rng));
  const Tensor c = l2_normalize_rows(random_tensor({n, 64}, rng));
  NoGradGuard ng;
  for (auto _ : state) benchmark::DoNotOptimize(rank_matrix(q, c));
}
BENCHMARK(BM_RankMatrix)->Arg(100)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();

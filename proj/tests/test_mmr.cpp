// Copyright 2026 The xmodal Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "oracles.hpp"
#include "xmodal/gradcheck.hpp"
#include "xmodal/mmr.hpp"
#include "xmodal/model.hpp"
#include "xmodal/retrieval.hpp"

using namespace xmodal;
using namespace xmodal::testing;

TEST_SUITE("mmr") {
  TEST_CASE("projection maps recipe and image tokens to mmr width with distinct maps") {
    std::mt19937_64 rng(1);
    MmrConfig cfg = small_mmr();
    const MultimodalRegularizer mmr(cfg, 6, 6, rng);
    const RecipeTokens r = fake_recipe(2, 4, 6, 6, rng);
    const ProjectedRecipe pr = mmr.project_recipe(r);
    CHECK(pr.tokens.tokens.shape() == Shape{12, 8});
    CHECK(pr.title_len == 2);
    CHECK(pr.ingredients_len == 4);
    CHECK(pr.instructions_len == 6);
    const TokenSequence same_as_image = mmr.project_image(r.all);
    CHECK(max_abs_diff(pr.tokens.tokens, same_as_image.tokens) > 1e-3);
  }

  TEST_CASE("zero projection weights give zero tokens") {
    std::mt19937_64 rng(2);
    const MultimodalRegularizer mmr(small_mmr(), 6, 6, rng);
    ParamList p;
    mmr.collect("mmr", p);
    fill(find_param(p, "mmr.recipe_projection.weight"), 0.0);
    fill(find_param(p, "mmr.image_projection.weight"), 0.0);
    const RecipeTokens r = fake_recipe(1, 2, 3, 6, rng);
    const Tensor pr = mmr.project_recipe(r).tokens.tokens;
    const Tensor pi = mmr.project_image(r.all).tokens;
    for (double v : pr.data()) CHECK(v == 0.0);
    for (double v : pi.data()) CHECK(v == 0.0);
  }

  TEST_CASE("projection gradient check") {
    std::mt19937_64 rng(3);
    const MultimodalRegularizer mmr(small_mmr(), 6, 6, rng);
    ParamList p;
    mmr.collect("mmr", p);
    const RecipeTokens r = fake_recipe(1, 2, 2, 6, rng);
    auto inputs = std::vector<Tensor>{r.all.tokens, find_param(p, "mmr.recipe_projection.weight"),
                                      find_param(p, "mmr.image_projection.weight")};
    const auto res = check_gradients(
        [&] { return add(weighted_sum(mmr.project_recipe(r).tokens.tokens), weighted_sum(mmr.project_image(r.all).tokens, 7)); },
        inputs);
    CHECK(res.max_relative_error < 1e-3);
  }

  TEST_CASE("enhanced image keeps N_I tokens and gradient reaches both modalities") {
    std::mt19937_64 rng(4);
    const MultimodalRegularizer mmr(small_mmr(), 8, 8, rng);
    const RecipeTokens r = fake_recipe(2, 3, 4, 8, rng);
    const Tensor image = random_tensor({16, 8}, rng);
    const ProjectedRecipe pr = mmr.project_recipe(r);
    const TokenSequence enhanced = mmr.enhance(mmr.project_image({image}), pr, {});
    CHECK(enhanced.tokens.shape() == Shape{16, 8});
    weighted_sum(enhanced.tokens).backward();
    REQUIRE(image.has_grad());
    REQUIRE(r.all.tokens.has_grad());
    double gi = 0, gr = 0;
    for (double g : image.grad()) gi += std::abs(g);
    for (double g : r.all.tokens.grad()) gr += std::abs(g);
    CHECK(gi > 0.0);
    CHECK(gr > 0.0);
  }

  TEST_CASE("title-only keys with a one-token title: cross-attention is exactly one-hot") {
    std::mt19937_64 rng(5);
    MmrConfig cfg = small_mmr();
    cfg.item_kv_mode = ItemKvMode::title_only;
    const MultimodalRegularizer mmr(cfg, 8, 8, rng);
    RecipeTokens a = fake_recipe(1, 3, 4, 8, rng);
    RecipeTokens b = a;
    // Same title, different ingredients and instructions.
    const Tensor rest = random_tensor({7, 8}, rng);
    b.all = {concat(std::vector<Tensor>{slice(a.all.tokens, 0, 0, 1), rest}, 0)};
    const TokenSequence img = mmr.project_image({random_tensor({16, 8}, rng)});
    std::vector<Tensor> probe;
    ForwardContext ctx;
    ctx.attention_probe = &probe;
    const TokenSequence ea = mmr.enhance(img, mmr.project_recipe(a), ctx);
    const TokenSequence eb = mmr.enhance(img, mmr.project_recipe(b), {});
    CHECK(max_abs_diff(ea.tokens, eb.tokens) == 0.0);
    // Per head: self-attention 16×16, then cross-attention 16×1.
    REQUIRE(probe.size() == 4);
    for (std::size_t h = 2; h < 4; ++h) {
      CHECK(probe[h].shape() == Shape{16, 1});
      for (double w : probe[h].data()) CHECK(w == 1.0);
    }
  }

  TEST_CASE("ingredients-only keys ignore title and instructions") {
    std::mt19937_64 rng(6);
    MmrConfig cfg = small_mmr();
    cfg.item_kv_mode = ItemKvMode::ingredients_only;
    const MultimodalRegularizer mmr(cfg, 8, 8, rng);
    RecipeTokens a = fake_recipe(2, 3, 4, 8, rng);
    RecipeTokens b = a;
    b.all = {concat(std::vector<Tensor>{random_tensor({2, 8}, rng), slice(a.all.tokens, 0, 2, 3),
                                        random_tensor({4, 8}, rng)},
                    0)};
    const TokenSequence img = mmr.project_image({random_tensor({16, 8}, rng)});
    CHECK(max_abs_diff(mmr.enhance(img, mmr.project_recipe(a), {}).tokens,
                       mmr.enhance(img, mmr.project_recipe(b), {}).tokens) == 0.0);
  }

  TEST_CASE("match probability lies in (0,1) and equals sigmoid(logit)") {
    std::mt19937_64 rng(7);
    const MultimodalRegularizer mmr(small_mmr(), 8, 8, rng);
    for (int t = 0; t < 10; ++t) {
      const RecipeTokens r = fake_recipe(1 + t % 3, 2, 3, 8, rng);
      const MatchScore s = mmr.match(mmr.project_recipe(r), mmr.project_image({random_tensor({16, 8}, rng)}), {});
      CHECK(s.value() > 0.0);
      CHECK(s.value() < 1.0);
      CHECK(s.value() == doctest::Approx(1.0 / (1.0 + std::exp(-s.logit.item()))).epsilon(1e-12));
    }
  }

  TEST_CASE("zero head weights give probability one half") {
    std::mt19937_64 rng(8);
    const MultimodalRegularizer mmr(small_mmr(), 8, 8, rng);
    ParamList p;
    mmr.collect("mmr", p);
    fill(find_param(p, "mmr.head.weight"), 0.0);
    fill(find_param(p, "mmr.head.bias"), 0.0);
    const RecipeTokens r = fake_recipe(2, 2, 2, 8, rng);
    CHECK(mmr.match(mmr.project_recipe(r), mmr.project_image({random_tensor({16, 8}, rng)}), {}).value() == 0.5);
  }

  TEST_CASE("MTD score-entry counter: N_R^2 + N_R*N_I per layer at N_R=45, N_I=196") {
    std::mt19937_64 rng(9);
    MmrConfig cfg = small_mmr();
    cfg.mtd_layers = 4;
    const MultimodalRegularizer mmr(cfg, 8, 8, rng);
    const RecipeTokens r = fake_recipe(5, 20, 20, 8, rng);
    const TokenSequence img = mmr.project_image({random_tensor({196, 8}, rng, false)});
    AttentionCounter counter;
    ForwardContext ctx;
    ctx.counter = &counter;
    NoGradGuard no_grad;
    mmr.score(mmr.project_recipe(r), img, ctx);
    CHECK(counter.calls == 8);
    CHECK(counter.score_entries == 4 * (45 * 45 + 45 * 196));
    CHECK(counter.score_entries / 4 == 10845);
  }

  TEST_CASE("ITM gradient check through ITEM and MTD") {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      std::mt19937_64 rng(100 + seed);
      const MultimodalRegularizer mmr(small_mmr(), 6, 6, rng);
      ParamList p;
      mmr.collect("mmr", p);
      const RecipeTokens r0 = fake_recipe(1, 2, 2, 6, rng);
      const RecipeTokens r1 = fake_recipe(2, 1, 2, 6, rng);
      const Tensor i0 = random_tensor({4, 6}, rng), i1 = random_tensor({4, 6}, rng);
      auto f = [&] {
        const ProjectedRecipe p0 = mmr.project_recipe(r0), p1 = mmr.project_recipe(r1);
        const TokenSequence v0 = mmr.project_image({i0}), v1 = mmr.project_image({i1});
        const std::vector<MatchScore> pos{mmr.match(p0, v0, {}), mmr.match(p1, v1, {})};
        const std::vector<MatchScore> neg{mmr.match(p1, v0, {}), mmr.match(p0, v1, {})};
        return itm_loss(pos, neg);
      };
      std::vector<Tensor> inputs{r0.all.tokens, r1.all.tokens, i0, i1};
      for (const Tensor& t : tensors_of(p)) inputs.push_back(t);
      GradCheckOptions opt;
      opt.max_elements_per_input = 6;
      opt.seed = seed;
      CHECK(check_gradients(f, inputs, opt).max_relative_error < 1e-3);
    }
  }

  TEST_CASE("hard negatives: B=2 is forced") {
    std::mt19937_64 rng(10);
    const Tensor er = random_unit_rows(2, 4, rng), ev = random_unit_rows(2, 4, rng);
    const HardNegatives h = select_hard_negatives(er, ev);
    CHECK(h.recipe_for_image == std::vector<std::size_t>{1, 0});
    CHECK(h.image_for_recipe == std::vector<std::size_t>{1, 0});
  }

  TEST_CASE("hard negatives: uniquely most similar recipe is chosen") {
    // E_v[0] points along e0; E_r[2] is closest after the excluded pair E_r[0].
    const Tensor ev = Tensor::from({3, 2}, {1, 0, 0, 1, 0, 1});
    const double c = std::sqrt(0.5);
    const Tensor er = Tensor::from({3, 2}, {1, 0, -1, 0, c, c});
    CHECK(select_hard_negatives(er, ev).recipe_for_image[0] == 2);
  }

  TEST_CASE("hard negatives: ties go to the lowest index") {
    const Tensor same = Tensor::from({4, 2}, {1, 0, 1, 0, 1, 0, 1, 0});
    const HardNegatives h = select_hard_negatives(same, same);
    CHECK(h.recipe_for_image == std::vector<std::size_t>{1, 0, 0, 0});
    CHECK(h.image_for_recipe == std::vector<std::size_t>{1, 0, 0, 0});
  }

  TEST_CASE("hard negatives match the exhaustive oracle and never pick the anchor") {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 100; ++t) {
      const std::size_t b = std::size_t{2} << (t % 4);
      const Tensor er = random_unit_rows(b, 5, rng), ev = random_unit_rows(b, 5, rng);
      const HardNegatives h = select_hard_negatives(er, ev);
      const HardOracle o = brute_force_hard(er, ev);
      CHECK(h.recipe_for_image == o.recipe_for_image);
      CHECK(h.image_for_recipe == o.image_for_recipe);
      for (std::size_t i = 0; i < b; ++i) {
        CHECK(h.recipe_for_image[i] != i);
        CHECK(h.image_for_recipe[i] != i);
      }
    }
  }

  TEST_CASE("hard negatives reject B < 2") {
    const Tensor one = Tensor::from({1, 2}, {1, 0});
    CHECK_THROWS_AS(select_hard_negatives(one, one), InputError);
  }

  TEST_CASE("ITM loss: all scores one half give ln 2") {
    std::vector<MatchScore> pos, neg;
    for (int i = 0; i < 3; ++i) pos.push_back(score_from_probability(0.5));
    for (int i = 0; i < 6; ++i) neg.push_back(score_from_probability(0.5));
    CHECK(itm_loss(pos, neg).item() == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }

  TEST_CASE("ITM loss: a near-perfect classifier approaches zero") {
    const std::vector<MatchScore> pos{score_from_probability(1.0 - 1e-9)};
    const std::vector<MatchScore> neg{score_from_probability(1e-9), score_from_probability(1e-9)};
    CHECK(itm_loss(pos, neg).item() < 1e-6);
  }

  TEST_CASE("ITM loss matches independent scalar BCE on random batches") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(1e-4, 1.0 - 1e-4);
    for (int t = 0; t < 100; ++t) {
      const std::size_t b = std::size_t{2} << (t % 4);
      std::vector<MatchScore> pos, neg;
      std::vector<double> probs, labels;
      for (std::size_t i = 0; i < 3 * b; ++i) {
        const double p = u(rng);
        const MatchScore s = score_from_probability(p);
        probs.push_back(s.value());
        labels.push_back(i < b ? 1.0 : 0.0);
        (i < b ? pos : neg).push_back(s);
      }
      CHECK(std::abs(itm_loss(pos, neg).item() - bce_oracle(probs, labels)) < 1e-9);
    }
  }

  TEST_CASE("BCE clamps probabilities") {
    const Tensor p = Tensor::from({1, 2}, {0.0, 1.0});
    const std::vector<double> labels{1.0, 0.0};
    CHECK(binary_cross_entropy(p, labels).item() == doctest::Approx(-std::log(1e-7)).epsilon(1e-9));
  }

  TEST_CASE("retrieval embeddings do not depend on the regularizer being present") {
    ModelConfig with;
    with.model_dim = 16;
    with.embed_dim = 8;
    with.ff_dim = 16;
    with.heads = 2;
    with.sentence_layers = with.entity_layers = with.htd_layers = with.image_layers = 1;
    with.mmr = small_mmr();
    with.mmr.mmr_dim = 16;
    ModelConfig without = with;
    without.use_mmr = false;
    CorpusSpec spec;
    spec.num_pairs = 16;
    const Corpus corpus = generate_corpus(spec);
    const Vocabulary vocab = Vocabulary::build(corpus);
    const CrossModalModel a(with, vocab.size()), b(without, vocab.size());
    std::vector<std::size_t> rows(16);
    for (std::size_t i = 0; i < 16; ++i) rows[i] = i;
    const EmbeddingPair ea = encode_embeddings(a, corpus, vocab, rows);
    const EmbeddingPair eb = encode_embeddings(b, corpus, vocab, rows);
    CHECK(max_abs_diff(ea.recipe, eb.recipe) == 0.0);
    CHECK(max_abs_diff(ea.image, eb.image) == 0.0);
    CHECK(rank_matrix(ea.image, ea.recipe) == rank_matrix(eb.image, eb.recipe));
    CHECK(a.parameters().size() > b.parameters().size());
  }
}

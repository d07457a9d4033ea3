// Copyright 2026 The xmodal Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numeric>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "xmodal/retrieval.hpp"

using namespace xmodal;
using namespace xmodal::testing;

namespace {

Tensor identity(std::size_t n) {
  Tensor t = Tensor::zeros({n, n});
  for (std::size_t i = 0; i < n; ++i) t.mutable_data()[i * n + i] = 1.0;
  return t;
}

struct Stats {
  double mean = 0.0, sd = 0.0;
};

Stats summarize(const std::vector<double>& v) {
  Stats s;
  for (double x : v) s.mean += x / static_cast<double>(v.size());
  for (double x : v) s.sd += (x - s.mean) * (x - s.mean) / static_cast<double>(v.size() - 1);
  s.sd = std::sqrt(s.sd);
  return s;
}

}  // namespace

TEST_SUITE("retrieval") {
  TEST_CASE("identical orthonormal embeddings rank first") {
    const Tensor e = identity(5);
    for (std::size_t r : rank_matrix(e, e)) CHECK(r == 1);
    const auto ranks = rank_matrix(e, e);
    CHECK(median_rank(ranks) == 1.0);
  }

  TEST_CASE("ground truth with third-highest similarity has rank 3") {
    // Row 0: truth 0.3 below 0.9 and 0.5.
    const std::vector<double> sim{0.3, 0.9, 0.5, 0.0, 0.2, 1.0, 0.1, 0.1, 0.7};
    const auto r = ranks_from_similarity(sim, 3);
    CHECK(r[0] == 3);
    CHECK(r[1] == 2);
    CHECK(r[2] == 1);
  }

  TEST_CASE("ties go to the lower candidate index") {
    const std::vector<double> sim{0.5, 0.5, 0.5, 0.5};
    const auto r = ranks_from_similarity(sim, 2);
    CHECK(r[0] == 1);
    CHECK(r[1] == 2);
  }

  TEST_CASE("ranks equal a sort oracle and are label-permutation invariant") {
    std::mt19937_64 rng(1);
    for (int t = 0; t < 50; ++t) {
      const std::size_t n = 3 + t % 20;
      const Tensor q = random_unit_rows(n, 4, rng), c = random_unit_rows(n, 4, rng);
      const auto ranks = rank_matrix(q, c);
      CHECK(ranks == sort_oracle(dot_matrix(q, c), n));
      std::vector<std::size_t> perm(n);
      std::iota(perm.begin(), perm.end(), 0);
      std::reverse(perm.begin(), perm.end());
      std::vector<double> pq(q.numel()), pc(c.numel());
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < 4; ++k) {
          pq[i * 4 + k] = q.at(perm[i], k);
          pc[i * 4 + k] = c.at(perm[i], k);
        }
      const auto permuted = rank_matrix(Tensor::from({n, 4}, pq), Tensor::from({n, 4}, pc));
      for (std::size_t i = 0; i < n; ++i) CHECK(permuted[i] == ranks[perm[i]]);
    }
  }

  TEST_CASE("median rank matches a sort oracle") {
    CHECK(median_rank(std::vector<std::size_t>{3, 1, 2}) == 2.0);
    CHECK(median_rank(std::vector<std::size_t>{4, 1, 2, 8}) == 3.0);
    CHECK_THROWS_AS(median_rank(std::vector<std::size_t>{}), InputError);
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<std::size_t> rank(1, 1000), len(1, 60);
    for (int t = 0; t < 200; ++t) {
      std::vector<std::size_t> r(len(rng));
      for (auto& x : r) x = rank(rng);
      CHECK(median_rank(r) == median_oracle(r));
    }
  }

  TEST_CASE("metrics from ranks") {
    const std::vector<std::size_t> r{1, 1, 2, 5, 6, 10, 11, 40};
    const Metrics m = metrics_from_ranks(r);
    CHECK(m.r1 == doctest::Approx(25.0));
    CHECK(m.r5 == doctest::Approx(50.0));
    CHECK(m.r10 == doctest::Approx(75.0));
    CHECK(m.medr == 5.5);
  }

  TEST_CASE("perfect embeddings give medR 1 and R@1 100") {
    const Tensor e = identity(40);
    EvalConfig cfg;
    cfg.bag_size = 20;
    cfg.num_bags = 3;
    const EvalReport rep = evaluate(e, e, cfg);
    REQUIRE(rep.directions.size() == 2);
    for (const DirectionReport& d : rep.directions) {
      CHECK(d.mean.medr == 1.0);
      CHECK(d.mean.r1 == 100.0);
      CHECK(d.per_bag.size() == 3);
    }
  }

  TEST_CASE("random embeddings approach the uniform-rank baseline") {
    // Independent embeddings per bag, so the bag metrics are i.i.d. samples.
    std::mt19937_64 rng(3);
    const std::size_t trials = 100;
    std::vector<double> r1[2], r10[2], medr[2];
    for (std::size_t t = 0; t < trials; ++t) {
      const Tensor r = random_unit_rows(100, 32, rng), v = random_unit_rows(100, 32, rng);
      EvalConfig cfg;
      cfg.bag_size = 100;
      cfg.num_bags = 1;
      cfg.seed = t;
      const EvalReport rep = evaluate(r, v, cfg);
      for (std::size_t d = 0; d < 2; ++d) {
        const Metrics& m = rep.directions[d].per_bag.front();
        CHECK(m.r1 <= m.r5);
        CHECK(m.r5 <= m.r10);
        CHECK(m.r10 <= 100.0);
        CHECK(m.medr >= 1.0);
        r1[d].push_back(m.r1);
        r10[d].push_back(m.r10);
        medr[d].push_back(m.medr);
      }
    }
    const double n = static_cast<double>(trials);
    for (std::size_t d = 0; d < 2; ++d) {
      const Stats s1 = summarize(r1[d]), s10 = summarize(r10[d]), sm = summarize(medr[d]);
      CHECK(std::abs(s1.mean - 1.0) <= 3.0 * s1.sd / std::sqrt(n));
      CHECK(std::abs(s10.mean - 10.0) <= 3.0 * s10.sd / std::sqrt(n));
      CHECK(std::abs(sm.mean - 50.5) <= 3.0 * sm.sd / std::sqrt(n));
    }
  }

  TEST_CASE("evaluation is deterministic given the seed") {
    std::mt19937_64 rng(4);
    const Tensor r = random_unit_rows(120, 8, rng), v = random_unit_rows(120, 8, rng);
    EvalConfig cfg;
    cfg.bag_size = 50;
    cfg.num_bags = 4;
    cfg.seed = 9;
    CHECK(report_jsonl(evaluate(r, v, cfg)) == report_jsonl(evaluate(r, v, cfg)));
    EvalConfig other = cfg;
    other.seed = 10;
    CHECK(report_jsonl(evaluate(r, v, cfg)) != report_jsonl(evaluate(r, v, other)));
  }

  TEST_CASE("input errors") {
    const Tensor e = identity(10);
    EvalConfig cfg;
    cfg.bag_size = 11;
    CHECK_THROWS_AS(evaluate(e, e, cfg), InputError);
    cfg.bag_size = 5;
    cfg.rerank_top_k = 6;
    const PairScorer s = [](std::size_t, std::size_t) { return 0.5; };
    CHECK_THROWS_AS(evaluate(e, e, cfg, &s), InputError);
    cfg.rerank_top_k = 3;
    CHECK_THROWS_AS(evaluate(e, e, cfg), InputError);
    CHECK_THROWS_AS(evaluate(e, identity(9), cfg, &s), DimensionError);
  }

  TEST_CASE("rerank orders by score and keeps ties stable") {
    const std::vector<std::size_t> cands{4, 2, 7, 1};
    const std::vector<double> score{0, 0.9, 0.2, 0, 0.1, 0, 0, 0.9};
    const auto r = rerank(cands, [&](std::size_t c) { return score[c]; });
    CHECK(r == std::vector<std::size_t>{7, 1, 2, 4});
    const std::vector<std::size_t> one{5};
    CHECK(rerank(one, [](std::size_t) { return 0.3; }) == one);
    CHECK(rerank(cands, [](std::size_t) { return 0.5; }) == cands);
  }

  TEST_CASE("constant scorer leaves ranks unchanged") {
    std::mt19937_64 rng(5);
    const Tensor r = random_unit_rows(60, 6, rng), v = random_unit_rows(60, 6, rng);
    EvalConfig cfg;
    cfg.bag_size = 30;
    cfg.num_bags = 3;
    cfg.rerank_top_k = 10;
    const PairScorer half = [](std::size_t, std::size_t) { return 0.5; };
    EvalConfig plain = cfg;
    plain.rerank_top_k.reset();
    CHECK(report_jsonl(evaluate(r, v, cfg, &half)) == report_jsonl(evaluate(r, v, plain)));
  }

  TEST_CASE("scorer favouring the second-ranked ground truth promotes it to rank 1") {
    // Image 0 prefers recipe 1 over recipe 0 in embedding space.
    const Tensor recipes = Tensor::from({3, 2}, {0.8, 0.6, 1.0, 0.0, 0.0, 1.0});
    const Tensor images = Tensor::from({3, 2}, {1.0, 0.0, 1.0, 0.0, 0.0, 1.0});
    EvalConfig cfg;
    cfg.bag_size = 3;
    cfg.num_bags = 1;
    cfg.directions = {Direction::image_to_recipe};
    const EvalReport before = evaluate(recipes, images, cfg);
    CHECK(before.at(Direction::image_to_recipe).mean.r1 == doctest::Approx(200.0 / 3.0));
    const PairScorer truth = [](std::size_t recipe, std::size_t image) { return recipe == image ? 0.9 : 0.1; };
    cfg.rerank_top_k = 2;
    const EvalReport after = evaluate(recipes, images, cfg, &truth);
    CHECK(after.at(Direction::image_to_recipe).mean.r1 == 100.0);
    CHECK_THROWS_AS(after.at(Direction::recipe_to_image), InputError);
  }

  TEST_CASE("re-ranking only permutes inside the window") {
    std::mt19937_64 rng(6);
    const Tensor r = random_unit_rows(200, 6, rng), v = random_unit_rows(200, 6, rng);
    std::mt19937_64 score_rng(7);
    std::vector<double> table(200 * 200);
    for (double& x : table) x = std::uniform_real_distribution<double>(0, 1)(score_rng);
    const PairScorer noisy = [&](std::size_t a, std::size_t b) { return table[a * 200 + b]; };
    EvalConfig plain;
    plain.bag_size = 100;
    plain.num_bags = 5;
    EvalConfig cfg = plain;
    cfg.rerank_top_k = 5;
    const EvalReport a = evaluate(r, v, plain), b = evaluate(r, v, cfg, &noisy);
    bool any_change = false;
    for (std::size_t d = 0; d < 2; ++d)
      for (std::size_t k = 0; k < 5; ++k) {
        const Metrics& x = a.directions[d].per_bag[k];
        const Metrics& y = b.directions[d].per_bag[k];
        CHECK(x.r5 == y.r5);
        CHECK(x.r10 == y.r10);
        any_change |= x.r1 != y.r1;
      }
    CHECK(any_change);
  }

  TEST_CASE("machine-readable report") {
    const Tensor e = identity(12);
    EvalConfig cfg;
    cfg.bag_size = 10;
    cfg.num_bags = 2;
    std::istringstream in(report_jsonl(evaluate(e, e, cfg)));
    std::string line;
    std::size_t bags = 0, summaries = 0;
    while (std::getline(in, line)) {
      const auto j = nlohmann::json::parse(line);
      const std::string type = j.at("type");
      CHECK(j.at("R@1").get<double>() == 100.0);
      if (type == "bag") ++bags;
      if (type == "summary") {
        ++summaries;
        CHECK(j.at("bags").get<std::size_t>() == 2);
        CHECK(j.at("medR").get<double>() == 1.0);
      }
    }
    CHECK(bags == 4);
    CHECK(summaries == 2);
    CHECK(format_report(evaluate(e, e, cfg)).find("image_to_recipe") != std::string::npos);
  }
}

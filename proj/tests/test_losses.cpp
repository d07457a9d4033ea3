// Copyright 2026 The xmodal Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <random>

#include "oracles.hpp"
#include "xmodal/gradcheck.hpp"
#include "xmodal/losses.hpp"

using namespace xmodal;
using namespace xmodal::testing;

namespace {

Tensor permute_rows(const Tensor& x, const std::vector<std::size_t>& perm) {
  std::vector<double> v(x.numel());
  for (std::size_t r = 0; r < perm.size(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) v[r * x.cols() + c] = x.at(perm[r], c);
  return Tensor::from(x.shape(), std::move(v));
}

}  // namespace

TEST_SUITE("losses") {
  TEST_CASE("triplet hinge values") {
    CHECK(triplet(0.0, 0.3, 0.3) == 0.0);
    CHECK(triplet(0.5, 0.6, 0.3) == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(triplet(0.1, 1.9, 0.3) == 0.0);
    CHECK(triplet(0.9, 0.1, 0.0) == doctest::Approx(0.8));
  }

  TEST_CASE("margin schedules") {
    MarginPolicy inc;
    CHECK(margin_at(inc, 0, 0) == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(margin_at(inc, 10, 0) == doctest::Approx(0.10).epsilon(1e-12));
    CHECK(margin_at(inc, 50, 0) == doctest::Approx(0.30).epsilon(1e-12));
    CHECK(margin_at(inc, 60, 0) == 0.30);
    double prev = 0.0;
    for (std::size_t e = 0; e < 200; ++e) {
      const double m = margin_at(inc, e, 0);
      CHECK(m >= prev);
      CHECK(m >= inc.clamp_min);
      CHECK(m <= inc.clamp_max);
      if (e >= 50) CHECK(std::abs(m - 0.3) < 1e-12);
      prev = m;
    }
    MarginPolicy ada;
    ada.kind = MarginKind::ada;
    CHECK(margin_at(ada, 0, 1) == 0.3);
    CHECK(margin_at(ada, 0, 0) == 0.3);
    CHECK(margin_at(ada, 0, 10) == 0.05);
    CHECK(margin_at(ada, 7, 2) == doctest::Approx(0.15));
    MarginPolicy fixed;
    fixed.kind = MarginKind::fixed;
    for (std::size_t e : {0u, 5u, 500u}) CHECK(margin_at(fixed, e, 3) == 0.3);
  }

  TEST_CASE("perfectly aligned orthonormal batch has zero loss") {
    const Tensor e = Tensor::from({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    const auto r = itc_loss(e, e, 0.3);
    CHECK(r.loss.item() == 0.0);
    CHECK(r.stats.delta_r == 0);
    CHECK(r.stats.delta_v == 0);
  }

  TEST_CASE("two-item batch with hand-enumerated triplets") {
    // r0·v0 = 0.6, r0·v1 = 0.8, r1·v0 = 0, r1·v1 = 1
    const Tensor r = Tensor::from({2, 2}, {0.6, 0.8, 0.0, 1.0});
    const Tensor v = Tensor::from({2, 2}, {1.0, 0.0, 0.0, 1.0});
    const double m = 0.3;
    // recipe anchors: (0.4 + 0.3 - 0.2) = 0.5, (0 + 0.3 - 1.0) < 0
    // image anchors: v0: d(v0,r0)=0.4, d(v0,r1)=1 -> 0; v1: d(v1,r1)=0, d(v1,r0)=0.2 -> 0.1
    const auto res = itc_loss(r, v, m);
    CHECK(res.stats.delta_r == 1);
    CHECK(res.stats.delta_v == 1);
    CHECK(res.loss.item() == doctest::Approx(0.5 + 0.1).epsilon(1e-12));
  }

  TEST_CASE("zero margin counts only inverted triplets") {
    std::mt19937_64 rng(1);
    const Tensor r = random_unit_rows(6, 4, rng), v = random_unit_rows(6, 4, rng);
    std::size_t inverted = 0;
    for (std::size_t a = 0; a < 6; ++a)
      for (std::size_t n = 0; n < 6; ++n)
        if (a != n) inverted += distance(r, a, v, a) > distance(r, a, v, n);
    CHECK(itc_loss(r, v, 0.0).stats.delta_r == inverted);
  }

  TEST_CASE("itc and semantic losses match brute force on 100 batches") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> margin(0.0, 0.5);
    for (std::size_t b : {2u, 4u, 8u, 16u}) {
      for (int t = 0; t < 100; ++t) {
        const Tensor r = random_unit_rows(b, 5, rng), v = random_unit_rows(b, 5, rng);
        const double m = margin(rng);
        const auto got = itc_loss(r, v, m);
        const auto want = itc_oracle(r, v, m);
        CHECK(std::abs(got.loss.item() - want.loss) < 1e-9);
        CHECK(got.stats.delta_r == want.delta_r);
        CHECK(got.stats.delta_v == want.delta_v);
        CHECK(count_active_triplets(r, v, m).total() == want.delta_r + want.delta_v);

        const Labels cls = random_labels(b, rng);
        const auto sem = semantic_loss(r, v, cls, m);
        const auto sem_want = semantic_oracle(r, v, cls, m);
        CHECK(std::abs(sem.loss.item() - sem_want.loss) < 1e-9);
        CHECK(sem.stats.delta_r == sem_want.delta_r);
        CHECK(sem.stats.delta_v == sem_want.delta_v);
      }
    }
  }

  TEST_CASE("semantic loss degenerate cases") {
    std::mt19937_64 rng(3);
    const Tensor r = random_unit_rows(4, 3, rng), v = random_unit_rows(4, 3, rng);
    const Labels one_class{1, 1, 1, 1};
    CHECK(semantic_loss(r, v, one_class, 0.3).loss.item() == 0.0);
    const Labels none(4);
    const auto res = semantic_loss(r, v, none, 0.3);
    CHECK(res.loss.item() == 0.0);
    CHECK(res.stats.total() == 0);
    const Labels too_few{1, 2};
    CHECK_THROWS_AS(semantic_loss(r, v, too_few, 0.3), DimensionError);
  }

  TEST_CASE("semantic loss on two classes of two matches the oracle") {
    const double s = std::sqrt(0.5);
    const Tensor r = Tensor::from({4, 2}, {1, 0, s, s, 0, 1, -s, s});
    const Tensor v = Tensor::from({4, 2}, {s, -s, 1, 0, -s, s, 0, 1});
    const Labels cls{0, 0, 1, 1};
    const auto got = semantic_loss(r, v, cls, 0.3);
    const auto want = semantic_oracle(r, v, cls, 0.3);
    CHECK(want.delta_r + want.delta_v > 0);
    CHECK(std::abs(got.loss.item() - want.loss) < 1e-12);
  }

  TEST_CASE("losses are invariant under a joint permutation") {
    std::mt19937_64 rng(4);
    for (int t = 0; t < 20; ++t) {
      const Tensor r = random_unit_rows(8, 4, rng), v = random_unit_rows(8, 4, rng);
      const Labels cls = random_labels(8, rng);
      std::vector<std::size_t> perm(8);
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      Labels pc(8);
      for (std::size_t i = 0; i < 8; ++i) pc[i] = cls[perm[i]];
      const Tensor pr = permute_rows(r, perm), pv = permute_rows(v, perm);
      CHECK(std::abs(itc_loss(r, v, 0.2).loss.item() - itc_loss(pr, pv, 0.2).loss.item()) < 1e-12);
      CHECK(std::abs(semantic_loss(r, v, cls, 0.2).loss.item() - semantic_loss(pr, pv, pc, 0.2).loss.item()) <
            1e-12);
    }
  }

  TEST_CASE("hinge boundary has zero subgradient") {
    const Tensor r = Tensor::from({2, 2}, {1, 0, 0, 1}, true);
    const Tensor v = Tensor::from({2, 2}, {1, 0, 0, 1}, true);
    // d_ap = 0, d_an = 1, margin 1: every hinge is exactly 0
    const auto res = itc_loss(r, v, 1.0);
    CHECK(res.loss.item() == 0.0);
    CHECK(res.stats.total() == 0);
    res.loss.backward();
    for (double g : r.grad()) CHECK(g == 0.0);
    for (double g : v.grad()) CHECK(g == 0.0);
  }

  TEST_CASE("loss gradients match central differences") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      std::mt19937_64 rng(100 + seed);
      Tensor r = random_unit_rows(6, 4, rng), v = random_unit_rows(6, 4, rng);
      r.set_requires_grad(true);
      v.set_requires_grad(true);
      const Labels cls{0, 1, 0, 1, std::nullopt, 0};
      CHECK(check_gradients([&] { return itc_loss(r, v, 0.25).loss; }, {r, v}).max_relative_error < 1e-3);
      CHECK(check_gradients([&] { return semantic_loss(r, v, cls, 0.25).loss; }, {r, v}).max_relative_error < 1e-3);
    }
  }

  TEST_CASE("non-finite embeddings are a numeric error") {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const Tensor r = Tensor::from({2, 2}, {1, 0, nan, 0});
    const Tensor v = Tensor::from({2, 2}, {1, 0, 0, 1});
    const Labels cls{0, 1};
    CHECK_THROWS_AS(itc_loss(r, v, 0.3), NumericError);
    CHECK_THROWS_AS(semantic_loss(r, v, cls, 0.3), NumericError);
  }

  TEST_CASE("batch of one is rejected") {
    const Tensor e = Tensor::from({1, 2}, {1, 0});
    CHECK_THROWS_AS(itc_loss(e, e, 0.3), InputError);
    CHECK_THROWS_AS(itc_loss(Tensor::zeros({2, 2}), Tensor::zeros({3, 2}), 0.3), DimensionError);
  }

  TEST_CASE("total loss composition") {
    CHECK(total_loss(1.0, 2.0, 0.5) == doctest::Approx(1.7).epsilon(1e-15));
    CHECK(total_loss(0.0, 0.0, 0.0) == 0.0);
    CHECK(total_loss(1.0, 2.0, 0.5, {0.1, 0.0}) == doctest::Approx(1.2));
    const Tensor itc = Tensor::from({1}, {1.0}, true), sem = Tensor::from({1}, {2.0}, true),
                 itm = Tensor::from({1}, {0.5}, true);
    const Tensor t = total_loss(itc, sem, itm);
    CHECK(t.item() == doctest::Approx(1.7).epsilon(1e-15));
    t.backward();
    CHECK(sem.grad()[0] == doctest::Approx(0.1));
    CHECK(itm.grad()[0] == 1.0);
    const Tensor no_itm = total_loss(itc, sem, itm, {0.1, 0.0});
    CHECK(no_itm.item() == doctest::Approx(1.2));
    CHECK(total_loss(itc, Tensor(), Tensor()).item() == 1.0);
  }
}

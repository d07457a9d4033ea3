// Copyright 2026 The xmodal Authors
// SPDX-License-Identifier: Apache-2.0

// Reference implementations shared by the unit and acceptance tests.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "test_util.hpp"
#include "xmodal/losses.hpp"
#include "xmodal/mmr.hpp"
#include "xmodal/recipe_encoder.hpp"

namespace xmodal::testing {

// Keeps samples away from the kinks of relu and of the hinge-like ops.
inline Tensor away_from_zero(Shape shape, std::mt19937_64& rng) {
  Tensor t = random_tensor(std::move(shape), rng);
  for (double& v : t.mutable_data()) v = v >= 0 ? v + 0.1 : v - 0.1;
  return t;
}

struct Primitive {
  std::string name;
  // Builds inputs, then a scalar function of them.
  std::function<std::pair<std::vector<Tensor>, std::function<Tensor()>>(std::mt19937_64&)> make;
};

inline std::vector<Primitive> primitives() {
  using Inputs = std::vector<Tensor>;
  using Fn = std::function<Tensor()>;
  std::vector<Primitive> p;
  p.push_back({"matmul", [](auto& rng) {
                 Tensor a = random_tensor({3, 4}, rng), b = random_tensor({4, 2}, rng);
                 return std::pair<Inputs, Fn>{{a, b}, [=] { return weighted_sum(matmul(a, b)); }};
               }});
  p.push_back({"transpose", [](auto& rng) {
                 Tensor a = random_tensor({3, 5}, rng);
                 return std::pair<Inputs, Fn>{{a}, [=] { return weighted_sum(transpose(a)); }};
               }});
  p.push_back({"add", [](auto& rng) {
                 Tensor a = random_tensor({2, 3}, rng), b = random_tensor({2, 3}, rng);
                 return std::pair<Inputs, Fn>{{a, b}, [=] { return weighted_sum(add(a, b)); }};
               }});
  p.push_back({"sub", [](auto& rng) {
                 Tensor a = random_tensor({2, 3}, rng), b = random_tensor({2, 3}, rng);
                 return std::pair<Inputs, Fn>{{a, b}, [=] { return weighted_sum(sub(a, b)); }};
               }});
  p.push_back({"mul", [](auto& rng) {
                 Tensor a = random_tensor({2, 3}, rng), b = random_tensor({2, 3}, rng);
                 return std::pair<Inputs, Fn>{{a, b}, [=] { return weighted_sum(mul(a, b)); }};
               }});
  p.push_back({"add_bias", [](auto& rng) {
                 Tensor a = random_tensor({3, 4}, rng), b = random_tensor({4}, rng);
                 return std::pair<Inputs, Fn>{{a, b}, [=] { return weighted_sum(add_bias(a, b)); }};
               }});
  p.push_back({"scale", [](auto& rng) {
                 Tensor a = random_tensor({2, 3}, rng);
                 return std::pair<Inputs, Fn>{{a}, [=] { return weighted_sum(scale(a, -1.7)); }};
               }});
  p.push_back({"concat_rows", [](auto& rng) {
                 Tensor a = random_tensor({2, 3}, rng), b = random_tensor({1, 3}, rng);
                 return std::pair<Inputs, Fn>{{a, b}, [=] { return weighted_sum(concat(std::vector<Tensor>{a, b}, 0)); }};
               }});
  p.push_back({"concat_cols", [](auto& rng) {
                 Tensor a = random_tensor({2, 3}, rng), b = random_tensor({2, 2}, rng);
                 return std::pair<Inputs, Fn>{{a, b}, [=] { return weighted_sum(concat(std::vector<Tensor>{a, b}, 1)); }};
               }});
  p.push_back({"slice", [](auto& rng) {
                 Tensor a = random_tensor({4, 5}, rng);
                 return std::pair<Inputs, Fn>{
                     {a}, [=] { return add(weighted_sum(slice(a, 0, 1, 2)), weighted_sum(slice(a, 1, 2, 3), 5)); }};
               }});
  p.push_back({"reshape", [](auto& rng) {
                 Tensor a = random_tensor({2, 6}, rng);
                 return std::pair<Inputs, Fn>{{a}, [=] { return weighted_sum(reshape(a, {3, 4})); }};
               }});
  p.push_back({"mean_axis0", [](auto& rng) {
                 Tensor a = random_tensor({4, 3}, rng);
                 return std::pair<Inputs, Fn>{{a}, [=] { return weighted_sum(mean_along_axis(a, 0)); }};
               }});
  p.push_back({"mean_axis1", [](auto& rng) {
                 Tensor a = random_tensor({4, 3}, rng);
                 return std::pair<Inputs, Fn>{{a}, [=] { return weighted_sum(mean_along_axis(a, 1)); }};
               }});
  p.push_back({"sum", [](auto& rng) {
                 Tensor a = random_tensor({3, 3}, rng);
                 return std::pair<Inputs, Fn>{{a}, [=] { return sum(mul(a, a)); }};
               }});
  p.push_back({"relu", [](auto& rng) {
                 Tensor a = away_from_zero({3, 4}, rng);
                 return std::pair<Inputs, Fn>{{a}, [=] { return weighted_sum(relu(a)); }};
               }});
  p.push_back({"gelu", [](auto& rng) {
                 Tensor a = random_tensor({3, 4}, rng, true, -3.0, 3.0);
                 return std::pair<Inputs, Fn>{{a}, [=] { return weighted_sum(gelu(a)); }};
               }});
  p.push_back({"sigmoid", [](auto& rng) {
                 Tensor a = random_tensor({3, 4}, rng, true, -4.0, 4.0);
                 return std::pair<Inputs, Fn>{{a}, [=] { return weighted_sum(sigmoid(a)); }};
               }});
  p.push_back({"log", [](auto& rng) {
                 Tensor a = random_tensor({3, 4}, rng, true, 0.2, 3.0);
                 return std::pair<Inputs, Fn>{{a}, [=] { return weighted_sum(log(a)); }};
               }});
  p.push_back({"softmax_rows", [](auto& rng) {
                 Tensor a = random_tensor({3, 5}, rng, true, -2.0, 2.0);
                 return std::pair<Inputs, Fn>{{a}, [=] { return weighted_sum(softmax_rows(a)); }};
               }});
  p.push_back({"layer_norm", [](auto& rng) {
                 Tensor x = random_tensor({3, 8}, rng), g = random_tensor({8}, rng), b = random_tensor({8}, rng);
                 return std::pair<Inputs, Fn>{{x, g, b}, [=] { return weighted_sum(layer_norm(x, g, b)); }};
               }});
  p.push_back({"l2_normalize_rows", [](auto& rng) {
                 Tensor a = random_tensor({3, 4}, rng);
                 return std::pair<Inputs, Fn>{{a}, [=] { return weighted_sum(l2_normalize_rows(a)); }};
               }});
  p.push_back({"embedding_lookup", [](auto& rng) {
                 Tensor t = random_tensor({6, 4}, rng);
                 const std::vector<std::int32_t> ids{3, 0, 3, 5};
                 return std::pair<Inputs, Fn>{{t}, [=] { return weighted_sum(embedding_lookup(t, ids)); }};
               }});
  p.push_back({"dropout", [](auto& rng) {
                 Tensor a = random_tensor({4, 4}, rng);
                 return std::pair<Inputs, Fn>{{a}, [=] {
                                                std::mt19937_64 mask_rng(17);
                                                return weighted_sum(dropout(a, 0.3, mask_rng));
                                              }};
               }});
  return p;
}

using Labels = std::vector<std::optional<std::int32_t>>;

inline double distance(const Tensor& x, std::size_t i, const Tensor& y, std::size_t j) {
  double s = 0.0;
  for (std::size_t k = 0; k < x.cols(); ++k) s += x.at(i, k) * y.at(j, k);
  return 1.0 - s;
}

struct OracleResult {
  double loss = 0.0;
  std::size_t delta_r = 0, delta_v = 0;
};

// Explicit anchors × positives × negatives enumeration in each direction.
template <typename Pos, typename Neg>
inline OracleResult brute_force(const Tensor& r, const Tensor& v, double margin, Pos positive, Neg negative) {
  const std::size_t b = r.rows();
  double sum_r = 0.0, sum_v = 0.0;
  OracleResult o;
  for (std::size_t a = 0; a < b; ++a)
    for (std::size_t p = 0; p < b; ++p)
      for (std::size_t n = 0; n < b; ++n) {
        if (!positive(a, p) || !negative(a, n)) continue;
        const double lr = triplet(distance(r, a, v, p), distance(r, a, v, n), margin);
        const double lv = triplet(distance(v, a, r, p), distance(v, a, r, n), margin);
        sum_r += lr;
        sum_v += lv;
        o.delta_r += lr > 0.0;
        o.delta_v += lv > 0.0;
      }
  o.loss = sum_r / static_cast<double>(std::max<std::size_t>(o.delta_r, 1)) +
           sum_v / static_cast<double>(std::max<std::size_t>(o.delta_v, 1));
  return o;
}

inline OracleResult itc_oracle(const Tensor& r, const Tensor& v, double margin) {
  return brute_force(
      r, v, margin, [](std::size_t a, std::size_t p) { return a == p; },
      [](std::size_t a, std::size_t n) { return a != n; });
}

inline OracleResult semantic_oracle(const Tensor& r, const Tensor& v, const Labels& cls, double margin) {
  return brute_force(
      r, v, margin, [&](std::size_t a, std::size_t p) { return cls[a] && cls[p] && *cls[a] == *cls[p]; },
      [&](std::size_t a, std::size_t n) { return cls[a] && cls[n] && *cls[a] != *cls[n]; });
}

inline Labels random_labels(std::size_t b, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> cls(0, 2);
  std::bernoulli_distribution labelled(0.6);
  Labels out(b);
  for (auto& c : out)
    if (labelled(rng)) c = cls(rng);
  return out;
}

// Rank by sorting (similarity desc, index asc) and locating the diagonal.
inline std::vector<std::size_t> sort_oracle(const std::vector<double>& sim, std::size_t n) {
  std::vector<std::size_t> ranks(n);
  for (std::size_t q = 0; q < n; ++q) {
    std::vector<std::pair<double, std::size_t>> row;
    for (std::size_t c = 0; c < n; ++c) row.emplace_back(-sim[q * n + c], c);
    std::sort(row.begin(), row.end());
    for (std::size_t p = 0; p < n; ++p)
      if (row[p].second == q) ranks[q] = p + 1;
  }
  return ranks;
}

inline double median_oracle(std::vector<std::size_t> r) {
  std::sort(r.begin(), r.end());
  const std::size_t n = r.size();
  return n % 2 ? static_cast<double>(r[n / 2]) : (static_cast<double>(r[n / 2 - 1]) + static_cast<double>(r[n / 2])) / 2.0;
}

inline std::vector<double> dot_matrix(const Tensor& q, const Tensor& c) {
  const std::size_t n = q.rows();
  std::vector<double> s(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < q.cols(); ++k) s[i * n + j] += q.at(i, k) * c.at(j, k);
  return s;
}

inline MmrConfig small_mmr() {
  MmrConfig c;
  c.item_layers = 1;
  c.item_heads = 2;
  c.mtd_layers = 2;
  c.mtd_heads = 2;
  c.mmr_dim = 8;
  c.ff_dim = 12;
  c.dropout_rate = 0.0;
  return c;
}

inline RecipeTokens fake_recipe(std::size_t title, std::size_t ing, std::size_t ins, std::size_t d, std::mt19937_64& rng) {
  RecipeTokens r;
  r.all = {random_tensor({title + ing + ins, d}, rng)};
  r.title = {slice(r.all.tokens, 0, 0, title)};
  r.ingredients = {slice(r.all.tokens, 0, title, ing)};
  r.instructions = {slice(r.all.tokens, 0, title + ing, ins)};
  return r;
}

struct HardOracle {
  std::vector<std::size_t> recipe_for_image, image_for_recipe;
};

inline HardOracle brute_force_hard(const Tensor& er, const Tensor& ev) {
  const std::size_t b = er.rows(), d = er.cols();
  HardOracle o{std::vector<std::size_t>(b), std::vector<std::size_t>(b)};
  for (std::size_t i = 0; i < b; ++i) {
    std::vector<std::pair<double, std::size_t>> to_r, to_v;
    for (std::size_t j = 0; j < b; ++j) {
      if (j == i) continue;
      double sr = 0, sv = 0;
      for (std::size_t k = 0; k < d; ++k) {
        sr += ev.at(i, k) * er.at(j, k);
        sv += er.at(i, k) * ev.at(j, k);
      }
      to_r.emplace_back(-sr, j);
      to_v.emplace_back(-sv, j);
    }
    o.recipe_for_image[i] = std::min_element(to_r.begin(), to_r.end())->second;
    o.image_for_recipe[i] = std::min_element(to_v.begin(), to_v.end())->second;
  }
  return o;
}

inline MatchScore score_from_probability(double p) {
  const Tensor logit = Tensor::from({1, 1}, {std::log(p / (1.0 - p))});
  return {logit, sigmoid(logit)};
}

inline double bce_oracle(const std::vector<double>& probs, const std::vector<double>& labels) {
  double s = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = std::min(std::max(probs[i], 1e-7), 1.0 - 1e-7);
    s += -(labels[i] * std::log(p) + (1.0 - labels[i]) * std::log(1.0 - p));
  }
  return s / static_cast<double>(probs.size());
}

}  // namespace xmodal::testing

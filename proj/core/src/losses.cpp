// Copyright 2026 The xmodal Authors
// SPDX-License-Identifier: Apache-2.0

#include "xmodal/losses.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "xmodal/ops.hpp"

namespace xmodal {

double margin_at(const MarginPolicy& policy, std::size_t epoch, std::size_t delta) {
  switch (policy.kind) {
    case MarginKind::fixed:
      return policy.alpha;
    case MarginKind::inc:
      return std::clamp(policy.alpha_inc_start + static_cast<double>(epoch) * policy.alpha_inc_step,
                        policy.clamp_min, policy.clamp_max);
    case MarginKind::ada:
      return std::clamp(policy.alpha / static_cast<double>(std::max<std::size_t>(delta, 1)), policy.clamp_min,
                        policy.clamp_max);
  }
  return policy.alpha;
}

double triplet(double d_ap, double d_an, double margin) { return std::max(0.0, d_ap + margin - d_an); }

namespace {

void check_pair(const Tensor& r, const Tensor& v, const char* op) {
  if (r.dim() != 2 || r.shape() != v.shape()) {
    throw DimensionError(std::string(op) + ": embeddings " + shape_str(r.shape()) + " vs " + shape_str(v.shape()));
  }
}

// sim[i*b + j] = r_i · v_j
std::vector<double> similarity(const Tensor& r, const Tensor& v) {
  const std::size_t b = r.rows(), d = r.cols();
  const auto rd = r.data();
  const auto vd = v.data();
  std::vector<double> sim(b * b);
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < b; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += rd[i * d + k] * vd[j * d + k];
      sim[i * b + j] = s;
    }
  return sim;
}

struct Direction {
  double loss = 0.0;
  std::size_t delta = 0;
};

// Batch-all hinge for one anchor modality. `sim_at(a, c)` is anchor a vs
// candidate c; `coef(a, c)` accumulates d(loss)/d(sim) before normalisation.
template <typename Sim, typename Pos, typename Neg, typename Coef>
Direction batch_all(std::size_t b, double margin, Sim sim_at, Pos is_positive, Neg is_negative, Coef coef) {
  Direction out;
  for (std::size_t a = 0; a < b; ++a) {
    for (std::size_t p = 0; p < b; ++p) {
      if (!is_positive(a, p)) continue;
      const double s_ap = sim_at(a, p);
      for (std::size_t n = 0; n < b; ++n) {
        if (!is_negative(a, n)) continue;
        const double l = margin - s_ap + sim_at(a, n);
        if (l > 0.0) {
          out.loss += l;
          ++out.delta;
          coef(a, p, -1.0);
          coef(a, n, 1.0);
        }
      }
    }
  }
  return out;
}

template <typename Pos, typename Neg>
TripletLossResult two_way_loss(const char* op, const Tensor& r, const Tensor& v, double margin, Pos is_positive,
                               Neg is_negative) {
  const std::size_t b = r.rows(), d = r.cols();
  const std::vector<double> sim = similarity(r, v);
  for (double x : sim) {
    if (!std::isfinite(x)) throw NumericError(std::string(op) + ": non-finite embedding similarity");
  }
  // grad_coef[i*b + j] multiplies r_i · v_j in the loss.
  std::vector<double> c_r(b * b, 0.0), c_v(b * b, 0.0);
  const Direction from_recipe = batch_all(
      b, margin, [&](std::size_t a, std::size_t c) { return sim[a * b + c]; }, is_positive, is_negative,
      [&](std::size_t a, std::size_t c, double w) { c_r[a * b + c] += w; });
  const Direction from_image = batch_all(
      b, margin, [&](std::size_t a, std::size_t c) { return sim[c * b + a]; }, is_positive, is_negative,
      [&](std::size_t a, std::size_t c, double w) { c_v[c * b + a] += w; });

  const double wr = 1.0 / static_cast<double>(std::max<std::size_t>(from_recipe.delta, 1));
  const double wv = 1.0 / static_cast<double>(std::max<std::size_t>(from_image.delta, 1));
  auto coef = std::make_shared<std::vector<double>>(b * b);
  for (std::size_t k = 0; k < b * b; ++k) (*coef)[k] = wr * c_r[k] + wv * c_v[k];

  TripletLossResult result;
  result.stats = {from_recipe.delta, from_image.delta};
  const double value = wr * from_recipe.loss + wv * from_image.loss;
  result.loss = make_op_result(op, {1}, {value}, {r, v}, [coef, b, d](detail::Node& self) {
    detail::Node& pr = *self.parents[0];
    detail::Node& pv = *self.parents[1];
    const double g = self.grad[0];
    for (std::size_t i = 0; i < b; ++i) {
      for (std::size_t j = 0; j < b; ++j) {
        const double c = g * (*coef)[i * b + j];
        if (c == 0.0) continue;
        if (pr.requires_grad)
          for (std::size_t k = 0; k < d; ++k) pr.grad[i * d + k] += c * pv.data[j * d + k];
        if (pv.requires_grad)
          for (std::size_t k = 0; k < d; ++k) pv.grad[j * d + k] += c * pr.data[i * d + k];
      }
    }
  });
  return result;
}

}  // namespace

TripletLossResult itc_loss(const Tensor& recipe_embeddings, const Tensor& image_embeddings, double margin) {
  check_pair(recipe_embeddings, image_embeddings, "itc_loss");
  if (recipe_embeddings.rows() < 2) throw InputError("itc_loss: batch size must be at least 2");
  return two_way_loss(
      "itc_loss", recipe_embeddings, image_embeddings, margin, [](std::size_t a, std::size_t c) { return a == c; },
      [](std::size_t a, std::size_t c) { return a != c; });
}

TripletLossResult semantic_loss(const Tensor& recipe_embeddings, const Tensor& image_embeddings,
                                std::span<const std::optional<std::int32_t>> classes, double margin) {
  check_pair(recipe_embeddings, image_embeddings, "semantic_loss");
  if (classes.size() != recipe_embeddings.rows()) {
    throw DimensionError("semantic_loss: " + std::to_string(classes.size()) + " labels for " +
                         std::to_string(recipe_embeddings.rows()) + " rows");
  }
  return two_way_loss(
      "semantic_loss", recipe_embeddings, image_embeddings, margin,
      [classes](std::size_t a, std::size_t c) { return classes[a] && classes[c] && *classes[a] == *classes[c]; },
      [classes](std::size_t a, std::size_t c) { return classes[a] && classes[c] && *classes[a] != *classes[c]; });
}

TripletBatchStats count_active_triplets(const Tensor& recipe_embeddings, const Tensor& image_embeddings,
                                        double margin) {
  NoGradGuard no_grad;
  return itc_loss(recipe_embeddings, image_embeddings, margin).stats;
}

double total_loss(double itc, double semantic, double itm, const LossWeights& w) {
  return itc + w.semantic * semantic + w.itm * itm;
}

Tensor total_loss(const Tensor& itc, const Tensor& semantic, const Tensor& itm, const LossWeights& w) {
  Tensor total = itc;
  if (w.semantic != 0.0 && semantic.defined()) total = add(total, scale(semantic, w.semantic));
  if (w.itm != 0.0 && itm.defined()) total = add(total, scale(itm, w.itm));
  return total;
}

}  // namespace xmodal

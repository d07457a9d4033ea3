// Copyright 2026 The xmodal Authors
// SPDX-License-Identifier: Apache-2.0

#include "xmodal/mmr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace xmodal {

void MmrConfig::validate() const {
  if (!item_layers || !item_heads || !mtd_layers || !mtd_heads || !mmr_dim || !ff_dim) {
    throw ConfigError("mmr: layer, head and width settings must be positive");
  }
  if (mmr_dim % item_heads != 0 || mmr_dim % mtd_heads != 0) {
    throw ConfigError("mmr: mmr_dim " + std::to_string(mmr_dim) + " must be divisible by the head counts");
  }
}

MultimodalRegularizer::MultimodalRegularizer(const MmrConfig& cfg, std::size_t recipe_dim, std::size_t image_dim,
                                             std::mt19937_64& rng)
    : cfg_(cfg) {
  cfg.validate();
  recipe_projection_ = Linear(recipe_dim, cfg.mmr_dim, rng);
  image_projection_ = Linear(image_dim, cfg.mmr_dim, rng);
  item_ = TransformerDecoder({cfg.item_heads, cfg.mmr_dim, cfg.ff_dim, cfg.item_layers, cfg.dropout_rate}, rng);
  mtd_ = TransformerDecoder({cfg.mtd_heads, cfg.mmr_dim, cfg.ff_dim, cfg.mtd_layers, cfg.dropout_rate}, rng);
  head_ = Linear(cfg.mmr_dim, 1, rng);
}

ProjectedRecipe MultimodalRegularizer::project_recipe(const RecipeTokens& recipe) const {
  ProjectedRecipe out;
  out.tokens = {recipe_projection_.forward(recipe.all.tokens)};
  out.title_len = recipe.title.length();
  out.ingredients_len = recipe.ingredients.length();
  out.instructions_len = recipe.instructions.length();
  return out;
}

TokenSequence MultimodalRegularizer::project_image(const TokenSequence& image_tokens) const {
  return {image_projection_.forward(image_tokens.tokens)};
}

TokenSequence MultimodalRegularizer::item_keys(const ProjectedRecipe& recipe) const {
  switch (cfg_.item_kv_mode) {
    case ItemKvMode::title_only:
      return {slice(recipe.tokens.tokens, 0, 0, recipe.title_len)};
    case ItemKvMode::ingredients_only:
      return {slice(recipe.tokens.tokens, 0, recipe.title_len, recipe.ingredients_len)};
    case ItemKvMode::all:
      break;
  }
  return recipe.tokens;
}

TokenSequence MultimodalRegularizer::enhance(const TokenSequence& image, const ProjectedRecipe& recipe,
                                             const ForwardContext& ctx) const {
  return item_.forward(image, item_keys(recipe), ctx);
}

MatchScore MultimodalRegularizer::score(const ProjectedRecipe& recipe, const TokenSequence& enhanced_image,
                                        const ForwardContext& ctx) const {
  const TokenSequence fused = mtd_.forward(recipe.tokens, enhanced_image, ctx);
  MatchScore out;
  out.logit = head_.forward(mean_along_axis(fused.tokens, 0));
  out.probability = sigmoid(out.logit);
  return out;
}

MatchScore MultimodalRegularizer::match(const ProjectedRecipe& recipe, const TokenSequence& image,
                                        const ForwardContext& ctx) const {
  return score(recipe, cfg_.use_item ? enhance(image, recipe, ctx) : image, ctx);
}

void MultimodalRegularizer::collect(const std::string& prefix, ParamList& out) const {
  recipe_projection_.collect(prefix + ".recipe_projection", out);
  image_projection_.collect(prefix + ".image_projection", out);
  if (cfg_.use_item) item_.collect(prefix + ".item", out);
  mtd_.collect(prefix + ".mtd", out);
  head_.collect(prefix + ".head", out);
}

HardNegatives select_hard_negatives(const Tensor& recipe_embeddings, const Tensor& image_embeddings) {
  if (recipe_embeddings.shape() != image_embeddings.shape() || recipe_embeddings.dim() != 2) {
    throw DimensionError("select_hard_negatives: " + shape_str(recipe_embeddings.shape()) + " vs " +
                         shape_str(image_embeddings.shape()));
  }
  const std::size_t b = recipe_embeddings.rows(), d = recipe_embeddings.cols();
  if (b < 2) throw InputError("select_hard_negatives: batch size must be at least 2");
  const auto r = recipe_embeddings.data();
  const auto v = image_embeddings.data();
  auto dot = [d](const double* x, const double* y) {
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) s += x[k] * y[k];
    return s;
  };
  HardNegatives out;
  out.recipe_for_image.resize(b);
  out.image_for_recipe.resize(b);
  for (std::size_t i = 0; i < b; ++i) {
    double best_recipe = -std::numeric_limits<double>::infinity();
    double best_image = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < b; ++j) {
      if (j == i) continue;
      const double to_recipe = dot(v.data() + i * d, r.data() + j * d);
      if (to_recipe > best_recipe) {
        best_recipe = to_recipe;
        out.recipe_for_image[i] = j;
      }
      const double to_image = dot(r.data() + i * d, v.data() + j * d);
      if (to_image > best_image) {
        best_image = to_image;
        out.image_for_recipe[i] = j;
      }
    }
  }
  return out;
}

Tensor binary_cross_entropy(const Tensor& probabilities, std::span<const double> labels) {
  constexpr double lo = 1e-7;
  constexpr double hi = 1.0 - 1e-7;
  const std::size_t n = probabilities.numel();
  if (labels.size() != n) {
    throw DimensionError("binary_cross_entropy: " + std::to_string(n) + " probabilities vs " +
                         std::to_string(labels.size()) + " labels");
  }
  const auto p = probabilities.data();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::isnan(p[i])) throw NumericError("binary_cross_entropy: NaN probability");
    const double s = std::clamp(p[i], lo, hi);
    total -= labels[i] * std::log(s) + (1.0 - labels[i]) * std::log(1.0 - s);
  }
  std::vector<double> saved(labels.begin(), labels.end());
  return make_op_result("binary_cross_entropy", {1}, {total / static_cast<double>(n)}, {probabilities},
                        [saved = std::move(saved), n](detail::Node& self) {
                          detail::Node& parent = *self.parents[0];
                          const double g = self.grad[0] / static_cast<double>(n);
                          for (std::size_t i = 0; i < n; ++i) {
                            const double s = parent.data[i];
                            if (s < lo || s > hi) continue;
                            const double y = saved[i];
                            parent.grad[i] += g * (-(y / s) + (1.0 - y) / (1.0 - s));
                          }
                        });
}

Tensor itm_loss(std::span<const MatchScore> positives, std::span<const MatchScore> negatives) {
  if (positives.empty() && negatives.empty()) throw InputError("itm_loss: no scored pairs");
  std::vector<Tensor> probs;
  std::vector<double> labels;
  probs.reserve(positives.size() + negatives.size());
  for (const MatchScore& s : positives) {
    probs.push_back(reshape(s.probability, {1, 1}));
    labels.push_back(1.0);
  }
  for (const MatchScore& s : negatives) {
    probs.push_back(reshape(s.probability, {1, 1}));
    labels.push_back(0.0);
  }
  return binary_cross_entropy(probs.size() == 1 ? probs.front() : concat(probs, 0), labels);
}

}  // namespace xmodal

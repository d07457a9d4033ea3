// Copyright 2026 The xmodal Authors
// SPDX-License-Identifier: Apache-2.0
//
// Training-only multimodal regularizer. Recipe and image tokens are projected
// to a shared width; the image-token enhancement decoder (ITEM) lets image
// tokens attend to recipe tokens; the multimodal decoder (MTD) lets recipe
// tokens attend to the enhanced image tokens and scores the pair. Retrieval
// never touches this module except in explicit re-ranking.

#pragma once

#include <random>
#include <vector>

#include "xmodal/image_encoder.hpp"
#include "xmodal/recipe_encoder.hpp"
#include "xmodal/transformer.hpp"

namespace xmodal {

enum class ItemKvMode { all, title_only, ingredients_only };

struct MmrConfig {
  std::size_t item_layers = 1;
  std::size_t item_heads = 4;
  std::size_t mtd_layers = 4;
  std::size_t mtd_heads = 4;
  std::size_t mmr_dim = 64;
  std::size_t ff_dim = 128;
  double dropout_rate = 0.1;
  ItemKvMode item_kv_mode = ItemKvMode::all;
  bool use_item = true;

  void validate() const;
};

// Recipe tokens at mmr width, with the entity boundaries kept for ITEM
// key/value selection.
struct ProjectedRecipe {
  TokenSequence tokens;
  std::size_t title_len = 0;
  std::size_t ingredients_len = 0;
  std::size_t instructions_len = 0;
};

struct MatchScore {
  Tensor logit;        // [1×1]
  Tensor probability;  // sigmoid(logit)

  double value() const { return probability.item(); }
};

class MultimodalRegularizer {
 public:
  MultimodalRegularizer() = default;
  MultimodalRegularizer(const MmrConfig& cfg, std::size_t recipe_dim, std::size_t image_dim, std::mt19937_64& rng);

  // Two distinct linear maps to mmr_dim.
  ProjectedRecipe project_recipe(const RecipeTokens& recipe) const;
  TokenSequence project_image(const TokenSequence& image_tokens) const;

  // Image tokens query (a subset of) the recipe tokens. Output length N_I.
  TokenSequence enhance(const TokenSequence& image, const ProjectedRecipe& recipe, const ForwardContext& ctx) const;
  // Recipe tokens query the enhanced image tokens; mean-pooled to one logit.
  MatchScore score(const ProjectedRecipe& recipe, const TokenSequence& enhanced_image,
                   const ForwardContext& ctx) const;
  // enhance (when enabled) followed by score.
  MatchScore match(const ProjectedRecipe& recipe, const TokenSequence& image, const ForwardContext& ctx) const;

  void collect(const std::string& prefix, ParamList& out) const;
  const MmrConfig& config() const { return cfg_; }

 private:
  TokenSequence item_keys(const ProjectedRecipe& recipe) const;

  MmrConfig cfg_;
  Linear recipe_projection_, image_projection_;
  TransformerDecoder item_;
  TransformerDecoder mtd_;
  Linear head_;
};

struct HardNegatives {
  std::vector<std::size_t> recipe_for_image;  // hardest recipe j != i for image anchor i
  std::vector<std::size_t> image_for_recipe;  // hardest image j != i for recipe anchor i
};

// Argmax of dot-product similarity over j != i, lowest index on ties. Rows of
// recipe_embeddings and image_embeddings are aligned pairs. B < 2 throws.
HardNegatives select_hard_negatives(const Tensor& recipe_embeddings, const Tensor& image_embeddings);

// Mean binary cross-entropy; positives are labelled 1, negatives 0.
// Probabilities are clamped to [1e-7, 1-1e-7] (zero gradient when clamped).
Tensor itm_loss(std::span<const MatchScore> positives, std::span<const MatchScore> negatives);
Tensor binary_cross_entropy(const Tensor& probabilities, std::span<const double> labels);

}  // namespace xmodal

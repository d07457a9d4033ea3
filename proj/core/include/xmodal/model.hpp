// Copyright 2026 The xmodal Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "xmodal/config.hpp"
#include "xmodal/corpus.hpp"
#include "xmodal/image_encoder.hpp"
#include "xmodal/mmr.hpp"
#include "xmodal/recipe_encoder.hpp"

namespace xmodal {

// Dual encoders plus the optional training-time regularizer. Parameters are
// initialized from model.init_seed in the order recipe, image, MMR.
class CrossModalModel {
 public:
  CrossModalModel(const ModelConfig& cfg, std::size_t vocab_size);

  const RecipeEncoder& recipe() const { return recipe_; }
  const ImageEncoder& image() const { return image_; }
  bool has_mmr() const { return mmr_.has_value(); }
  const MultimodalRegularizer& mmr() const;

  // Named by module: "recipe.*", "image.*", "mmr.*".
  ParamList parameters() const;
  ParamList image_parameters() const;
  const ModelConfig& config() const { return cfg_; }

 private:
  ModelConfig cfg_;
  RecipeEncoder recipe_;
  ImageEncoder image_;
  std::optional<MultimodalRegularizer> mmr_;
};

// FNV-1a over parameter names, shapes and bit patterns.
std::uint64_t parameter_fingerprint(const ParamList& params);

struct EmbeddingPair {
  Tensor recipe;  // [N×embed_dim]
  Tensor image;   // [N×embed_dim]
};

// Eval-mode embeddings for the given corpus rows, fanned out over
// worker_threads().
EmbeddingPair encode_embeddings(const CrossModalModel& model, const Corpus& corpus, const Vocabulary& vocab,
                                std::span<const std::size_t> rows);

// Eval-mode MTD match probability for every (recipe row, image row) request.
// Caches projected tokens of the given rows.
class MatchScorer {
 public:
  MatchScorer(const CrossModalModel& model, const Corpus& corpus, const Vocabulary& vocab,
              std::span<const std::size_t> rows);
  // Indices are positions within `rows`.
  double operator()(std::size_t recipe_row, std::size_t image_row) const;

 private:
  const MultimodalRegularizer* mmr_;
  std::vector<ProjectedRecipe> recipes_;
  std::vector<TokenSequence> images_;
};

}  // namespace xmodal

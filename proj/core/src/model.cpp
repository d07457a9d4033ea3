// Copyright 2026 The xmodal Authors
// SPDX-License-Identifier: Apache-2.0

#include "xmodal/model.hpp"

#include <cstring>
#include <random>

#include "xmodal/ops.hpp"
#include "xmodal/parallel.hpp"

namespace xmodal {

CrossModalModel::CrossModalModel(const ModelConfig& cfg, std::size_t vocab_size) : cfg_(cfg) {
  std::mt19937_64 rng(cfg.init_seed);
  recipe_ = RecipeEncoder(recipe_encoder_config(cfg, vocab_size), rng);
  image_ = ImageEncoder(image_encoder_config(cfg), rng);
  if (cfg.use_mmr) mmr_.emplace(mmr_config(cfg), cfg.model_dim, cfg.model_dim, rng);
}

const MultimodalRegularizer& CrossModalModel::mmr() const {
  if (!mmr_) throw ConfigError("model was built without the multimodal regularizer");
  return *mmr_;
}

ParamList CrossModalModel::parameters() const {
  ParamList out;
  recipe_.collect("recipe", out);
  image_.collect("image", out);
  if (mmr_) mmr_->collect("mmr", out);
  return out;
}

ParamList CrossModalModel::image_parameters() const {
  ParamList out;
  image_.collect("image", out);
  return out;
}

std::uint64_t parameter_fingerprint(const ParamList& params) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ULL;
    }
  };
  for (const NamedTensor& p : params) {
    mix(p.name.data(), p.name.size());
    for (std::size_t d : p.tensor.shape()) mix(&d, sizeof d);
    const auto data = p.tensor.data();
    mix(data.data(), data.size() * sizeof(double));
  }
  return h;
}

EmbeddingPair encode_embeddings(const CrossModalModel& model, const Corpus& corpus, const Vocabulary& vocab,
                                std::span<const std::size_t> rows) {
  const std::size_t n = rows.size();
  if (n == 0) throw InputError("encode_embeddings: no rows");
  std::vector<Tensor> recipes(n), images(n);
  parallel_for(n, [&](std::size_t i) {
    NoGradGuard no_grad;
    const ForwardContext ctx;
    const CorpusRecord& rec = corpus.records.at(rows[i]);
    recipes[i] = model.recipe().encode(to_recipe_sample(rec, vocab, false), ctx).embedding;
    images[i] = model.image().encode(to_image_sample(rec, corpus.image_size, corpus.channels), ctx).embedding;
  });
  NoGradGuard no_grad;
  return {concat(recipes, 0), concat(images, 0)};
}

MatchScorer::MatchScorer(const CrossModalModel& model, const Corpus& corpus, const Vocabulary& vocab,
                         std::span<const std::size_t> rows)
    : mmr_(&model.mmr()), recipes_(rows.size()), images_(rows.size()) {
  parallel_for(rows.size(), [&](std::size_t i) {
    NoGradGuard no_grad;
    const ForwardContext ctx;
    const CorpusRecord& rec = corpus.records.at(rows[i]);
    recipes_[i] = mmr_->project_recipe(model.recipe().encode(to_recipe_sample(rec, vocab, false), ctx));
    images_[i] = mmr_->project_image(
        model.image().encode(to_image_sample(rec, corpus.image_size, corpus.channels), ctx).tokens);
  });
}

double MatchScorer::operator()(std::size_t recipe_row, std::size_t image_row) const {
  NoGradGuard no_grad;
  const ForwardContext ctx;
  return mmr_->match(recipes_.at(recipe_row), images_.at(image_row), ctx).value();
}

}  // namespace xmodal

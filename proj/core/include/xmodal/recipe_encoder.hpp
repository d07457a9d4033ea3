// Copyright 2026 The xmodal Authors
// SPDX-License-Identifier: Apache-2.0
//
// Hierarchical recipe encoder. Sentence transformers T read each tokenized
// sentence; entity transformers HT read the per-sentence mean vectors of the
// ingredient and instruction lists; a cross-entity decoder stage lets every
// entity attend to the other two. Mean-pooled entities are concatenated and
// projected to the unit-norm recipe embedding.

#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "xmodal/transformer.hpp"

namespace xmodal {

using TokenIds = std::vector<std::int32_t>;

struct RecipeSample {
  TokenIds title;
  std::vector<TokenIds> ingredients;
  std::vector<TokenIds> instructions;
  std::optional<std::int32_t> class_label;

  // Throws InputError on an empty entity, an empty sentence, or an id outside
  // the vocabulary.
  void validate(std::size_t vocab_size) const;
};

enum class HtdMode {
  full,  // every entity queries the concatenation of the other two
  v2,    // ingredients <-> instructions only; title still queries both
  none,  // skip the cross-entity stage
};

struct RecipeEncoderConfig {
  std::size_t vocab_size = 0;
  std::size_t model_dim = 64;
  std::size_t embed_dim = 64;
  AttentionConfig sentence{4, 64, 128, 2, 0.1};
  AttentionConfig entity{4, 64, 128, 2, 0.1};
  AttentionConfig htd{4, 64, 128, 2, 0.1};
  HtdMode htd_mode = HtdMode::full;
  bool share_htd = true;
  bool positional_encoding = true;
  std::size_t max_title_tokens = 8;
  std::size_t max_ingredients = 12;
  std::size_t max_ingredient_tokens = 6;
  std::size_t max_instructions = 12;
  std::size_t max_instruction_tokens = 8;

  void validate() const;
};

struct EntityTokens {
  TokenSequence title;
  TokenSequence ingredients;
  TokenSequence instructions;
};

struct RecipeTokens {
  TokenSequence title;         // t_ttl after the cross-entity stage
  TokenSequence ingredients;   // t_ing
  TokenSequence instructions;  // t_ins
  TokenSequence all;           // [title; ingredients; instructions]
  Tensor embedding;            // [1×embed_dim], unit norm; set by pool()
};

class RecipeEncoder {
 public:
  RecipeEncoder() = default;
  RecipeEncoder(const RecipeEncoderConfig& cfg, std::mt19937_64& rng);

  // Sentence and entity transformers.
  EntityTokens encode_level1(const RecipeSample& sample, const ForwardContext& ctx) const;
  // Cross-entity decoder stage; leaves `embedding` undefined.
  RecipeTokens encode_htd(const EntityTokens& level1, const ForwardContext& ctx) const;
  // Mean per entity, concatenate, project, L2-normalize. Fills tokens.embedding.
  Tensor pool(RecipeTokens& tokens) const;

  RecipeTokens encode(const RecipeSample& sample, const ForwardContext& ctx) const;

  void collect(const std::string& prefix, ParamList& out) const;
  const RecipeEncoderConfig& config() const { return cfg_; }

 private:
  Tensor embed_sentence(const TokenIds& ids, std::size_t max_tokens) const;
  TokenSequence encode_list(const std::vector<TokenIds>& sentences, std::size_t max_sentences,
                            std::size_t max_tokens, const TransformerEncoder& sentence_encoder,
                            const TransformerEncoder& entity_encoder, const ForwardContext& ctx) const;
  const TransformerDecoder& htd_for(std::size_t entity) const;

  RecipeEncoderConfig cfg_;
  Tensor word_embedding_;  // [vocab×model_dim]
  TransformerEncoder title_encoder_, ingredient_encoder_, instruction_encoder_;
  TransformerEncoder ingredient_list_encoder_, instruction_list_encoder_;
  std::vector<TransformerDecoder> htd_;  // one when shared, else title/ingredients/instructions
  Linear projection_;                    // 3·model_dim -> embed_dim
};

}  // namespace xmodal

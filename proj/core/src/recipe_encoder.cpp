// Copyright 2026 The xmodal Authors
// SPDX-License-Identifier: Apache-2.0

#include "xmodal/recipe_encoder.hpp"

#include <algorithm>

namespace xmodal {

namespace {

void check_ids(const TokenIds& ids, std::size_t vocab_size, const char* where) {
  if (ids.empty()) throw InputError(std::string("recipe: empty sentence in ") + where);
  for (std::int32_t id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab_size) {
      throw InputError(std::string("recipe: token id ") + std::to_string(id) + " in " + where +
                       " outside vocabulary of " + std::to_string(vocab_size));
    }
  }
}

}  // namespace

void RecipeSample::validate(std::size_t vocab_size) const {
  if (title.empty()) throw InputError("recipe: empty title");
  if (ingredients.empty()) throw InputError("recipe: empty ingredient list");
  if (instructions.empty()) throw InputError("recipe: empty instruction list");
  check_ids(title, vocab_size, "title");
  for (const TokenIds& s : ingredients) check_ids(s, vocab_size, "ingredients");
  for (const TokenIds& s : instructions) check_ids(s, vocab_size, "instructions");
  if (class_label && *class_label < 0) throw InputError("recipe: negative class label");
}

void RecipeEncoderConfig::validate() const {
  if (vocab_size == 0) throw ConfigError("recipe encoder: vocab_size must be positive");
  for (const AttentionConfig* c : {&sentence, &entity, &htd}) {
    c->validate();
    if (c->model_dim != model_dim) throw ConfigError("recipe encoder: every stage must use model_dim");
  }
  if (embed_dim == 0) throw ConfigError("recipe encoder: embed_dim must be positive");
  if (!max_title_tokens || !max_ingredients || !max_ingredient_tokens || !max_instructions ||
      !max_instruction_tokens) {
    throw ConfigError("recipe encoder: truncation limits must be positive");
  }
}

RecipeEncoder::RecipeEncoder(const RecipeEncoderConfig& cfg, std::mt19937_64& rng) : cfg_(cfg) {
  cfg.validate();
  word_embedding_ = random_normal({cfg.vocab_size, cfg.model_dim}, 1.0, rng, true);
  title_encoder_ = TransformerEncoder(cfg.sentence, rng);
  ingredient_encoder_ = TransformerEncoder(cfg.sentence, rng);
  instruction_encoder_ = TransformerEncoder(cfg.sentence, rng);
  ingredient_list_encoder_ = TransformerEncoder(cfg.entity, rng);
  instruction_list_encoder_ = TransformerEncoder(cfg.entity, rng);
  if (cfg.htd_mode != HtdMode::none) {
    const std::size_t count = cfg.share_htd ? 1 : 3;
    for (std::size_t i = 0; i < count; ++i) htd_.emplace_back(cfg.htd, rng);
  }
  projection_ = Linear(3 * cfg.model_dim, cfg.embed_dim, rng);
}

Tensor RecipeEncoder::embed_sentence(const TokenIds& ids, std::size_t max_tokens) const {
  const std::size_t n = std::min(ids.size(), max_tokens);
  Tensor x = embedding_lookup(word_embedding_, std::span<const std::int32_t>(ids.data(), n));
  return cfg_.positional_encoding ? add_positions(x) : x;
}

TokenSequence RecipeEncoder::encode_list(const std::vector<TokenIds>& sentences, std::size_t max_sentences,
                                         std::size_t max_tokens, const TransformerEncoder& sentence_encoder,
                                         const TransformerEncoder& entity_encoder,
                                         const ForwardContext& ctx) const {
  if (sentences.empty()) throw InputError("recipe: empty entity");
  const std::size_t n = std::min(sentences.size(), max_sentences);
  std::vector<Tensor> sentence_vectors;
  sentence_vectors.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const TokenSequence encoded = sentence_encoder.forward({embed_sentence(sentences[i], max_tokens)}, ctx);
    sentence_vectors.push_back(mean_along_axis(encoded.tokens, 0));
  }
  Tensor list = n == 1 ? sentence_vectors.front() : concat(sentence_vectors, 0);
  if (cfg_.positional_encoding) list = add_positions(list);
  return entity_encoder.forward({list}, ctx);
}

EntityTokens RecipeEncoder::encode_level1(const RecipeSample& sample, const ForwardContext& ctx) const {
  if (sample.title.empty()) throw InputError("recipe: empty title");
  EntityTokens out;
  out.title = title_encoder_.forward({embed_sentence(sample.title, cfg_.max_title_tokens)}, ctx);
  out.ingredients = encode_list(sample.ingredients, cfg_.max_ingredients, cfg_.max_ingredient_tokens,
                                ingredient_encoder_, ingredient_list_encoder_, ctx);
  out.instructions = encode_list(sample.instructions, cfg_.max_instructions, cfg_.max_instruction_tokens,
                                 instruction_encoder_, instruction_list_encoder_, ctx);
  return out;
}

const TransformerDecoder& RecipeEncoder::htd_for(std::size_t entity) const {
  return htd_.size() == 1 ? htd_.front() : htd_.at(entity);
}

RecipeTokens RecipeEncoder::encode_htd(const EntityTokens& l1, const ForwardContext& ctx) const {
  RecipeTokens out;
  auto kv_of = [](const TokenSequence& a, const TokenSequence& b) {
    const Tensor parts[] = {a.tokens, b.tokens};
    return TokenSequence{concat(parts, 0)};
  };
  switch (cfg_.htd_mode) {
    case HtdMode::none:
      out.title = l1.title;
      out.ingredients = l1.ingredients;
      out.instructions = l1.instructions;
      break;
    case HtdMode::full:
      out.title = htd_for(0).forward(l1.title, kv_of(l1.ingredients, l1.instructions), ctx);
      out.ingredients = htd_for(1).forward(l1.ingredients, kv_of(l1.title, l1.instructions), ctx);
      out.instructions = htd_for(2).forward(l1.instructions, kv_of(l1.title, l1.ingredients), ctx);
      break;
    case HtdMode::v2:
      out.title = htd_for(0).forward(l1.title, kv_of(l1.ingredients, l1.instructions), ctx);
      out.ingredients = htd_for(1).forward(l1.ingredients, l1.instructions, ctx);
      out.instructions = htd_for(2).forward(l1.instructions, l1.ingredients, ctx);
      break;
  }
  const Tensor parts[] = {out.title.tokens, out.ingredients.tokens, out.instructions.tokens};
  out.all = {concat(parts, 0)};
  return out;
}

Tensor RecipeEncoder::pool(RecipeTokens& tokens) const {
  const Tensor means[] = {mean_along_axis(tokens.title.tokens, 0), mean_along_axis(tokens.ingredients.tokens, 0),
                          mean_along_axis(tokens.instructions.tokens, 0)};
  tokens.embedding = l2_normalize_rows(projection_.forward(concat(means, 1)));
  return tokens.embedding;
}

RecipeTokens RecipeEncoder::encode(const RecipeSample& sample, const ForwardContext& ctx) const {
  RecipeTokens tokens = encode_htd(encode_level1(sample, ctx), ctx);
  pool(tokens);
  return tokens;
}

void RecipeEncoder::collect(const std::string& prefix, ParamList& out) const {
  out.push_back({prefix + ".word_embedding", word_embedding_});
  title_encoder_.collect(prefix + ".t_title", out);
  ingredient_encoder_.collect(prefix + ".t_ingredients", out);
  instruction_encoder_.collect(prefix + ".t_instructions", out);
  ingredient_list_encoder_.collect(prefix + ".ht_ingredients", out);
  instruction_list_encoder_.collect(prefix + ".ht_instructions", out);
  if (htd_.size() == 1) {
    htd_.front().collect(prefix + ".htd", out);
  } else {
    static const char* const roles[] = {"title", "ingredients", "instructions"};
    for (std::size_t i = 0; i < htd_.size(); ++i) htd_[i].collect(prefix + ".htd_" + roles[i], out);
  }
  projection_.collect(prefix + ".projection", out);
}

}  // namespace xmodal

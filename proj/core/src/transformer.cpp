// Copyright 2026 The xmodal Authors
// SPDX-License-Identifier: Apache-2.0

#include "xmodal/transformer.hpp"

#include <cmath>

namespace xmodal {

void AttentionConfig::validate() const {
  if (num_heads == 0 || model_dim == 0 || ff_dim == 0 || num_layers == 0) {
    throw ConfigError("attention config: heads, model_dim, ff_dim and num_layers must be positive");
  }
  if (model_dim % num_heads != 0) {
    throw ConfigError("attention config: model_dim " + std::to_string(model_dim) + " is not divisible by " +
                      std::to_string(num_heads) + " heads");
  }
  if (dropout_rate < 0.0 || dropout_rate >= 1.0) throw ConfigError("attention config: dropout_rate outside [0,1)");
}

MultiHeadAttention::MultiHeadAttention(const AttentionConfig& cfg, std::mt19937_64& rng)
    : heads_(cfg.num_heads),
      q_proj_(cfg.model_dim, cfg.model_dim, rng),
      k_proj_(cfg.model_dim, cfg.model_dim, rng),
      v_proj_(cfg.model_dim, cfg.model_dim, rng),
      out_proj_(cfg.model_dim, cfg.model_dim, rng) {
  cfg.validate();
}

TokenSequence MultiHeadAttention::forward(const TokenSequence& q, const TokenSequence& kv,
                                          const ForwardContext& ctx) const {
  const std::size_t d = q_proj_.in_features();
  if (q.dim() != d || kv.dim() != d) {
    throw DimensionError("attention: query dim " + std::to_string(q.dim()) + " and key/value dim " +
                         std::to_string(kv.dim()) + " must both equal model_dim " + std::to_string(d));
  }
  const std::size_t head_dim = d / heads_;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_dim));
  const Tensor queries = q_proj_.forward(q.tokens);
  const Tensor keys = k_proj_.forward(kv.tokens);
  const Tensor values = v_proj_.forward(kv.tokens);
  if (ctx.counter) {
    ctx.counter->score_entries += q.length() * kv.length();
    ctx.counter->calls += 1;
  }
  std::vector<Tensor> head_outputs;
  head_outputs.reserve(heads_);
  for (std::size_t h = 0; h < heads_; ++h) {
    const Tensor qh = slice(queries, 1, h * head_dim, head_dim);
    const Tensor kh = slice(keys, 1, h * head_dim, head_dim);
    const Tensor vh = slice(values, 1, h * head_dim, head_dim);
    Tensor weights = softmax_rows(scale(matmul(qh, transpose(kh)), inv_sqrt));
    if (ctx.attention_probe) ctx.attention_probe->push_back(weights);
    head_outputs.push_back(matmul(weights, vh));
  }
  const Tensor merged = heads_ == 1 ? head_outputs.front() : concat(head_outputs, 1);
  return {out_proj_.forward(merged)};
}

void MultiHeadAttention::collect(const std::string& prefix, ParamList& out) const {
  q_proj_.collect(prefix + ".q", out);
  k_proj_.collect(prefix + ".k", out);
  v_proj_.collect(prefix + ".v", out);
  out_proj_.collect(prefix + ".out", out);
}

FeedForward::FeedForward(const AttentionConfig& cfg, std::mt19937_64& rng)
    : fc1_(cfg.model_dim, cfg.ff_dim, rng), fc2_(cfg.ff_dim, cfg.model_dim, rng) {}

void FeedForward::collect(const std::string& prefix, ParamList& out) const {
  fc1_.collect(prefix + ".fc1", out);
  fc2_.collect(prefix + ".fc2", out);
}

namespace {

Tensor residual(const Tensor& x, const Tensor& sublayer, double rate, const ForwardContext& ctx) {
  const double p = ctx.dropout_rate(rate);
  return add(x, p > 0.0 ? dropout(sublayer, p, *ctx.rng) : sublayer);
}

}  // namespace

TransformerEncoder::TransformerEncoder(const AttentionConfig& cfg, std::mt19937_64& rng) : cfg_(cfg) {
  cfg.validate();
  layers_.reserve(cfg.num_layers);
  for (std::size_t i = 0; i < cfg.num_layers; ++i) {
    layers_.push_back({MultiHeadAttention(cfg, rng), FeedForward(cfg, rng), LayerNorm(cfg.model_dim),
                       LayerNorm(cfg.model_dim)});
  }
}

TokenSequence TransformerEncoder::forward(const TokenSequence& x, const ForwardContext& ctx) const {
  Tensor h = x.tokens;
  for (const Layer& layer : layers_) {
    const TokenSequence cur{h};
    h = layer.ln1.forward(residual(h, layer.self_attn.forward(cur, cur, ctx).tokens, cfg_.dropout_rate, ctx));
    h = layer.ln2.forward(residual(h, layer.ff.forward(h), cfg_.dropout_rate, ctx));
  }
  return {h};
}

void TransformerEncoder::collect(const std::string& prefix, ParamList& out) const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const std::string p = prefix + ".layer" + std::to_string(i);
    layers_[i].self_attn.collect(p + ".self_attn", out);
    layers_[i].ff.collect(p + ".ff", out);
    layers_[i].ln1.collect(p + ".ln1", out);
    layers_[i].ln2.collect(p + ".ln2", out);
  }
}

TransformerDecoder::TransformerDecoder(const AttentionConfig& cfg, std::mt19937_64& rng) : cfg_(cfg) {
  cfg.validate();
  layers_.reserve(cfg.num_layers);
  for (std::size_t i = 0; i < cfg.num_layers; ++i) {
    layers_.push_back({MultiHeadAttention(cfg, rng), MultiHeadAttention(cfg, rng), FeedForward(cfg, rng),
                       LayerNorm(cfg.model_dim), LayerNorm(cfg.model_dim), LayerNorm(cfg.model_dim)});
  }
}

TokenSequence TransformerDecoder::forward(const TokenSequence& q, const TokenSequence& kv,
                                          const ForwardContext& ctx) const {
  if (q.dim() != kv.dim()) {
    throw DimensionError("decoder: query " + shape_str(q.tokens.shape()) + " and key/value " +
                         shape_str(kv.tokens.shape()) + " differ in model dim");
  }
  Tensor h = q.tokens;
  for (const Layer& layer : layers_) {
    const TokenSequence cur{h};
    h = layer.ln1.forward(residual(h, layer.self_attn.forward(cur, cur, ctx).tokens, cfg_.dropout_rate, ctx));
    h = layer.ln2.forward(residual(h, layer.cross_attn.forward({h}, kv, ctx).tokens, cfg_.dropout_rate, ctx));
    h = layer.ln3.forward(residual(h, layer.ff.forward(h), cfg_.dropout_rate, ctx));
  }
  return {h};
}

void TransformerDecoder::collect(const std::string& prefix, ParamList& out) const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const std::string p = prefix + ".layer" + std::to_string(i);
    layers_[i].self_attn.collect(p + ".self_attn", out);
    layers_[i].cross_attn.collect(p + ".cross_attn", out);
    layers_[i].ff.collect(p + ".ff", out);
    layers_[i].ln1.collect(p + ".ln1", out);
    layers_[i].ln2.collect(p + ".ln2", out);
    layers_[i].ln3.collect(p + ".ln3", out);
  }
}

}  // namespace xmodal

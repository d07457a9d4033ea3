// Copyright 2026 The xmodal Authors
// SPDX-License-Identifier: Apache-2.0
//
// Multi-head attention and post-norm transformer stacks. None of the blocks
// mask attention or add positions; callers add positions when they build the
// input sequence.

#pragma once

#include <random>
#include <string>
#include <vector>

#include "xmodal/nn.hpp"

namespace xmodal {

struct AttentionConfig {
  std::size_t num_heads = 4;
  std::size_t model_dim = 64;
  std::size_t ff_dim = 128;
  std::size_t num_layers = 2;
  double dropout_rate = 0.1;

  // Throws ConfigError unless model_dim is a positive multiple of num_heads.
  void validate() const;
};

// Queries come from `q`; keys and values both derive from `kv`.
class MultiHeadAttention {
 public:
  MultiHeadAttention() = default;
  MultiHeadAttention(const AttentionConfig& cfg, std::mt19937_64& rng);

  TokenSequence forward(const TokenSequence& q, const TokenSequence& kv, const ForwardContext& ctx) const;
  void collect(const std::string& prefix, ParamList& out) const;

 private:
  std::size_t heads_ = 1;
  Linear q_proj_, k_proj_, v_proj_, out_proj_;
};

class FeedForward {
 public:
  FeedForward() = default;
  FeedForward(const AttentionConfig& cfg, std::mt19937_64& rng);

  Tensor forward(const Tensor& x) const { return fc2_.forward(gelu(fc1_.forward(x))); }
  void collect(const std::string& prefix, ParamList& out) const;

 private:
  Linear fc1_, fc2_;
};

// Per layer: x ← LN(x + SelfAttn(x)); x ← LN(x + FF(x)).
class TransformerEncoder {
 public:
  TransformerEncoder() = default;
  TransformerEncoder(const AttentionConfig& cfg, std::mt19937_64& rng);

  TokenSequence forward(const TokenSequence& x, const ForwardContext& ctx) const;
  void collect(const std::string& prefix, ParamList& out) const;
  const AttentionConfig& config() const { return cfg_; }

 private:
  struct Layer {
    MultiHeadAttention self_attn;
    FeedForward ff;
    LayerNorm ln1, ln2;
  };
  AttentionConfig cfg_;
  std::vector<Layer> layers_;
};

// Transformer decoder block without causal masking. Per layer:
//   q ← LN(q + SelfAttn(q)); q ← LN(q + CrossAttn(q, kv)); q ← LN(q + FF(q)).
class TransformerDecoder {
 public:
  TransformerDecoder() = default;
  TransformerDecoder(const AttentionConfig& cfg, std::mt19937_64& rng);

  TokenSequence forward(const TokenSequence& q, const TokenSequence& kv, const ForwardContext& ctx) const;
  void collect(const std::string& prefix, ParamList& out) const;
  const AttentionConfig& config() const { return cfg_; }

 private:
  struct Layer {
    MultiHeadAttention self_attn, cross_attn;
    FeedForward ff;
    LayerNorm ln1, ln2, ln3;
  };
  AttentionConfig cfg_;
  std::vector<Layer> layers_;
};

// Score-matrix entries per layer, per head, of a decoder with `query_len`
// queries over `kv_len` keys, and of an encoder over the joint sequence.
constexpr std::uint64_t decoder_score_entries(std::uint64_t query_len, std::uint64_t kv_len) {
  return query_len * query_len + query_len * kv_len;
}
constexpr std::uint64_t joint_encoder_score_entries(std::uint64_t query_len, std::uint64_t kv_len) {
  return (query_len + kv_len) * (query_len + kv_len);
}

}  // namespace xmodal

// Copyright 2026 The xmodal Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "xmodal/ops.hpp"
#include "xmodal/tensor.hpp"

namespace xmodal {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};
using ParamList = std::vector<NamedTensor>;

// Counts attention score-matrix entries (Lq·Lkv per attention call; heads are
// not multiplied in).
struct AttentionCounter {
  std::uint64_t score_entries = 0;
  std::uint64_t calls = 0;
};

struct ForwardContext {
  bool training = false;
  std::mt19937_64* rng = nullptr;
  AttentionCounter* counter = nullptr;
  // When set, every softmax'd attention matrix is appended here.
  std::vector<Tensor>* attention_probe = nullptr;

  double dropout_rate(double configured) const { return training && rng ? configured : 0.0; }
};

// Ordered sequence of d-dimensional token vectors, stored as a [L×d] tensor.
struct TokenSequence {
  Tensor tokens;

  std::size_t length() const { return tokens.rows(); }
  std::size_t dim() const { return tokens.cols(); }
};

class Linear {
 public:
  Linear() = default;
  // Weights uniform in ±1/sqrt(in), zero bias.
  Linear(std::size_t in, std::size_t out, std::mt19937_64& rng, bool with_bias = true);

  Tensor forward(const Tensor& x) const;
  void collect(const std::string& prefix, ParamList& out) const;

  std::size_t in_features() const { return weight_.rows(); }
  std::size_t out_features() const { return weight_.cols(); }
  const Tensor& weight() const { return weight_; }

 private:
  Tensor weight_;  // [in×out]
  Tensor bias_;    // [out], undefined without bias
};

class LayerNorm {
 public:
  LayerNorm() = default;
  explicit LayerNorm(std::size_t dim);

  Tensor forward(const Tensor& x) const { return layer_norm(x, gamma_, beta_, 1e-5); }
  void collect(const std::string& prefix, ParamList& out) const;

 private:
  Tensor gamma_;
  Tensor beta_;
};

// Parameter-free sinusoidal position table [length×dim].
Tensor sinusoidal_positions(std::size_t length, std::size_t dim);
Tensor add_positions(const Tensor& x);

Tensor random_normal(Shape shape, double stddev, std::mt19937_64& rng, bool requires_grad);

}  // namespace xmodal

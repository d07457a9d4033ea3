// Copyright 2026 The xmodal Authors
// SPDX-License-Identifier: Apache-2.0
//
// Miniature patch-token vision transformer.

#pragma once

#include <random>

#include "xmodal/transformer.hpp"

namespace xmodal {

// Raster of shape [H×W×C], values in [0,1].
struct ImageSample {
  Tensor pixels;
};

// Non-overlapping P×P patches in row-major patch order, each flattened as
// (row, col, channel). Returns [N_I × P·P·C]; throws DimensionError when H or W
// is not a multiple of P.
TokenSequence patchify(const ImageSample& image, std::size_t patch_size);

struct ImageEncoderConfig {
  std::size_t image_size = 32;
  std::size_t channels = 3;
  std::size_t patch_size = 8;
  std::size_t model_dim = 64;
  std::size_t embed_dim = 64;
  AttentionConfig encoder{4, 64, 128, 2, 0.1};
  bool positional_encoding = true;

  std::size_t num_patches() const { return (image_size / patch_size) * (image_size / patch_size); }
  void validate() const;
};

struct ImageTokens {
  TokenSequence tokens;  // patch outputs, CLS excluded: [N_I×model_dim]
  Tensor embedding;      // [1×embed_dim], unit norm
};

class ImageEncoder {
 public:
  ImageEncoder() = default;
  ImageEncoder(const ImageEncoderConfig& cfg, std::mt19937_64& rng);

  ImageTokens encode(const ImageSample& image, const ForwardContext& ctx) const;

  void collect(const std::string& prefix, ParamList& out) const;
  const ImageEncoderConfig& config() const { return cfg_; }

 private:
  ImageEncoderConfig cfg_;
  Linear patch_projection_;
  Tensor cls_token_;  // [1×model_dim]
  TransformerEncoder encoder_;
  Linear head_;
};

}  // namespace xmodal

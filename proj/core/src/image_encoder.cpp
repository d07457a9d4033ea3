// Copyright 2026 The xmodal Authors
// SPDX-License-Identifier: Apache-2.0

#include "xmodal/image_encoder.hpp"

#include <algorithm>

namespace xmodal {

TokenSequence patchify(const ImageSample& image, std::size_t patch_size) {
  const Tensor& px = image.pixels;
  if (px.dim() != 3) throw DimensionError("patchify: expected [H×W×C] raster, got " + shape_str(px.shape()));
  const std::size_t h = px.size(0), w = px.size(1), c = px.size(2);
  if (patch_size == 0 || h % patch_size != 0 || w % patch_size != 0) {
    throw DimensionError("patchify: raster " + shape_str(px.shape()) + " is not divisible into " +
                         std::to_string(patch_size) + "x" + std::to_string(patch_size) + " patches");
  }
  const std::size_t ph = h / patch_size, pw = w / patch_size;
  const std::size_t patch_len = patch_size * patch_size * c;
  std::vector<double> out(ph * pw * patch_len);
  const auto src = px.data();
  for (std::size_t pr = 0; pr < ph; ++pr) {
    for (std::size_t pc = 0; pc < pw; ++pc) {
      double* dst = out.data() + (pr * pw + pc) * patch_len;
      for (std::size_t y = 0; y < patch_size; ++y) {
        const std::size_t row = pr * patch_size + y;
        const double* line = src.data() + (row * w + pc * patch_size) * c;
        std::copy_n(line, patch_size * c, dst + y * patch_size * c);
      }
    }
  }
  return {Tensor::from({ph * pw, patch_len}, std::move(out))};
}

void ImageEncoderConfig::validate() const {
  if (channels == 0 || patch_size == 0 || image_size % patch_size != 0) {
    throw ConfigError("image encoder: image_size must be a positive multiple of patch_size");
  }
  encoder.validate();
  if (encoder.model_dim != model_dim) throw ConfigError("image encoder: encoder must use model_dim");
  if (embed_dim == 0) throw ConfigError("image encoder: embed_dim must be positive");
}

ImageEncoder::ImageEncoder(const ImageEncoderConfig& cfg, std::mt19937_64& rng) : cfg_(cfg) {
  cfg.validate();
  patch_projection_ = Linear(cfg.patch_size * cfg.patch_size * cfg.channels, cfg.model_dim, rng);
  cls_token_ = random_normal({1, cfg.model_dim}, 0.02, rng, true);
  encoder_ = TransformerEncoder(cfg.encoder, rng);
  head_ = Linear(cfg.model_dim, cfg.embed_dim, rng);
}

ImageTokens ImageEncoder::encode(const ImageSample& image, const ForwardContext& ctx) const {
  const TokenSequence patches = patchify(image, cfg_.patch_size);
  if (patches.dim() != patch_projection_.in_features()) {
    throw DimensionError("image encoder: patch length " + std::to_string(patches.dim()) + " does not match " +
                         std::to_string(patch_projection_.in_features()));
  }
  const Tensor parts[] = {cls_token_, patch_projection_.forward(patches.tokens)};
  Tensor sequence = concat(parts, 0);
  if (cfg_.positional_encoding) sequence = add_positions(sequence);
  const TokenSequence encoded = encoder_.forward({sequence}, ctx);
  ImageTokens out;
  out.tokens = {slice(encoded.tokens, 0, 1, encoded.length() - 1)};
  out.embedding = l2_normalize_rows(head_.forward(slice(encoded.tokens, 0, 0, 1)));
  return out;
}

void ImageEncoder::collect(const std::string& prefix, ParamList& out) const {
  patch_projection_.collect(prefix + ".patch_projection", out);
  out.push_back({prefix + ".cls_token", cls_token_});
  encoder_.collect(prefix + ".encoder", out);
  head_.collect(prefix + ".head", out);
}

}  // namespace xmodal

// Copyright 2026 The xmodal Authors
// SPDX-License-Identifier: Apache-2.0
//
// Embedding dump (little-endian):
//   "XMEB"  u32 version  u64 N  u64 d
//   f64 recipe[N·d]  f64 image[N·d]  u64 pair_id[N]

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "xmodal/tensor.hpp"

namespace xmodal {

struct EmbeddingFile {
  static constexpr std::uint32_t kVersion = 1;

  Tensor recipe;  // [N×d], unit rows
  Tensor image;   // [N×d], unit rows
  std::vector<std::uint64_t> pair_ids;
};

std::vector<char> serialize_embeddings(const EmbeddingFile& emb);
// Throws FormatError with an offset when the header disagrees with the payload.
EmbeddingFile deserialize_embeddings(std::span<const char> bytes);

void save_embeddings(const EmbeddingFile& emb, const std::filesystem::path& path);
EmbeddingFile load_embeddings(const std::filesystem::path& path);

}  // namespace xmodal

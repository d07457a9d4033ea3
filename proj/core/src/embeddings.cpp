// Copyright 2026 The xmodal Authors
// SPDX-License-Identifier: Apache-2.0

#include "xmodal/embeddings.hpp"

#include <cstring>

#include "xmodal/binary_io.hpp"

namespace xmodal {

namespace {
constexpr char kMagic[4] = {'X', 'M', 'E', 'B'};
}

std::vector<char> serialize_embeddings(const EmbeddingFile& emb) {
  if (emb.recipe.dim() != 2 || emb.recipe.shape() != emb.image.shape()) {
    throw DimensionError("embeddings: recipe " + shape_str(emb.recipe.shape()) + " vs image " +
                         shape_str(emb.image.shape()));
  }
  if (emb.pair_ids.size() != emb.recipe.rows()) throw DimensionError("embeddings: one pair id per row required");
  ByteWriter w;
  w.put_raw(kMagic, sizeof kMagic);
  w.put<std::uint32_t>(EmbeddingFile::kVersion);
  w.put<std::uint64_t>(emb.recipe.rows());
  w.put<std::uint64_t>(emb.recipe.cols());
  w.put_doubles(emb.recipe.data());
  w.put_doubles(emb.image.data());
  for (std::uint64_t id : emb.pair_ids) w.put<std::uint64_t>(id);
  return w.bytes();
}

EmbeddingFile deserialize_embeddings(std::span<const char> bytes) {
  ByteReader r(bytes);
  if (std::memcmp(r.take(sizeof kMagic, "magic"), kMagic, sizeof kMagic) != 0) {
    throw FormatError("not an embedding file (bad magic)", 0);
  }
  const std::size_t version_at = r.offset();
  const auto version = r.get<std::uint32_t>("version");
  if (version != EmbeddingFile::kVersion) {
    throw FormatError("unsupported embedding file version " + std::to_string(version), version_at);
  }
  const std::size_t header_at = r.offset();
  const auto n = r.get<std::uint64_t>("row count");
  const auto d = r.get<std::uint64_t>("dimension");
  if (n == 0 || d == 0) throw FormatError("empty embedding matrix", header_at);
  const std::uint64_t row_bytes = d * sizeof(double) * 2 + sizeof(std::uint64_t);
  if (d > r.remaining() || n > r.remaining() || n * row_bytes != r.remaining()) {
    throw FormatError("header announces " + std::to_string(n) + "×" + std::to_string(d) + " but payload holds " +
                          std::to_string(r.remaining()) + " bytes",
                      header_at);
  }
  EmbeddingFile e;
  e.recipe = Tensor::from({n, d}, r.get_doubles(n * d, "recipe vectors"));
  e.image = Tensor::from({n, d}, r.get_doubles(n * d, "image vectors"));
  e.pair_ids.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) e.pair_ids.push_back(r.get<std::uint64_t>("pair id"));
  return e;
}

void save_embeddings(const EmbeddingFile& emb, const std::filesystem::path& path) {
  write_binary_file(path, serialize_embeddings(emb));
}

EmbeddingFile load_embeddings(const std::filesystem::path& path) {
  return deserialize_embeddings(read_binary_file(path));
}

}  // namespace xmodal

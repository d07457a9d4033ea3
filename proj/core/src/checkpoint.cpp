// Copyright 2026 The xmodal Authors
// SPDX-License-Identifier: Apache-2.0

#include "xmodal/checkpoint.hpp"

#include <algorithm>
#include <cstring>
#include <unordered_map>

#include "xmodal/binary_io.hpp"

namespace xmodal {

namespace {

constexpr char kMagic[8] = {'X', 'M', 'C', 'K', 'P', 'T', '0', '1'};
constexpr std::uint32_t kMaxRank = 8;

void put_shape(ByteWriter& w, const Shape& shape) {
  w.put<std::uint32_t>(static_cast<std::uint32_t>(shape.size()));
  for (std::size_t d : shape) w.put<std::uint64_t>(d);
}

Shape get_shape(ByteReader& r) {
  const std::size_t at = r.offset();
  const auto rank = r.get<std::uint32_t>("parameter rank");
  if (rank == 0 || rank > kMaxRank) throw FormatError("parameter rank " + std::to_string(rank) + " out of range", at);
  Shape shape(rank);
  for (auto& d : shape) {
    const std::size_t dim_at = r.offset();
    d = r.get<std::uint64_t>("parameter dimension");
    if (d == 0 || d > (std::uint64_t{1} << 32)) throw FormatError("implausible parameter dimension", dim_at);
  }
  return shape;
}

void put_records(ByteWriter& w, const std::vector<ParamRecord>& records, bool with_moments) {
  w.put<std::uint64_t>(records.size());
  for (const ParamRecord& p : records) {
    w.put_string(p.name);
    put_shape(w, p.shape);
    w.put_doubles(p.data);
    if (with_moments) {
      w.put_doubles(p.adam_m);
      w.put_doubles(p.adam_v);
      w.put<std::uint64_t>(p.adam_step);
    }
  }
}

std::vector<ParamRecord> get_records(ByteReader& r, bool with_moments) {
  const std::size_t at = r.offset();
  const auto count = r.get<std::uint64_t>("parameter count");
  if (count > r.remaining()) throw FormatError("implausible parameter count", at);
  std::vector<ParamRecord> out(count);
  for (ParamRecord& p : out) {
    p.name = r.get_string("parameter name", 4096);
    p.shape = get_shape(r);
    const std::size_t n = shape_numel(p.shape);
    p.data = r.get_doubles(n, "parameter data");
    if (with_moments) {
      p.adam_m = r.get_doubles(n, "first moment");
      p.adam_v = r.get_doubles(n, "second moment");
      p.adam_step = r.get<std::uint64_t>("step count");
    }
  }
  return out;
}

}  // namespace

std::vector<char> serialize_checkpoint(const Checkpoint& ckpt) {
  for (const ParamRecord& p : ckpt.params) {
    const std::size_t n = shape_numel(p.shape);
    if (p.data.size() != n || p.adam_m.size() != n || p.adam_v.size() != n) {
      throw DimensionError("checkpoint: parameter " + p.name + " payload does not match " + shape_str(p.shape));
    }
  }
  for (const ParamRecord& p : ckpt.best_params) {
    if (p.data.size() != shape_numel(p.shape)) {
      throw DimensionError("checkpoint: best parameter " + p.name + " payload does not match " + shape_str(p.shape));
    }
  }
  ByteWriter w;
  w.put_raw(kMagic, sizeof kMagic);
  w.put<std::uint32_t>(ckpt.format_version);
  w.put<std::uint64_t>(ckpt.epoch);
  w.put_string(ckpt.config);
  w.put<std::uint64_t>(ckpt.vocabulary.size());
  for (const std::string& word : ckpt.vocabulary) w.put_string(word);
  put_records(w, ckpt.params, true);
  w.put<std::uint8_t>(ckpt.selection.has_best ? 1 : 0);
  w.put<std::uint64_t>(ckpt.selection.best_epoch);
  w.put<double>(ckpt.selection.best_medr);
  w.put<double>(ckpt.selection.best_r1);
  put_records(w, ckpt.best_params, false);
  const std::uint64_t sum = fnv1a(w.bytes());
  w.put<std::uint64_t>(sum);
  return w.bytes();
}

Checkpoint deserialize_checkpoint(std::span<const char> bytes) {
  ByteReader r(bytes);
  if (std::memcmp(r.take(sizeof kMagic, "magic"), kMagic, sizeof kMagic) != 0) {
    throw FormatError("not a checkpoint (bad magic)", 0);
  }
  Checkpoint c;
  const std::size_t version_at = r.offset();
  c.format_version = r.get<std::uint32_t>("format version");
  if (c.format_version != Checkpoint::kFormatVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(c.format_version), version_at);
  }
  c.epoch = r.get<std::uint64_t>("epoch");
  c.config = r.get_string("config snapshot");
  const std::size_t vocab_at = r.offset();
  const auto words = r.get<std::uint64_t>("vocabulary size");
  if (words > r.remaining()) throw FormatError("implausible vocabulary size", vocab_at);
  c.vocabulary.reserve(words);
  for (std::uint64_t i = 0; i < words; ++i) c.vocabulary.push_back(r.get_string("vocabulary word", 4096));
  c.params = get_records(r, true);
  const std::size_t flag_at = r.offset();
  const auto has_best = r.get<std::uint8_t>("selection flag");
  if (has_best > 1) throw FormatError("bad selection flag", flag_at);
  c.selection.has_best = has_best == 1;
  c.selection.best_epoch = r.get<std::uint64_t>("best epoch");
  c.selection.best_medr = r.get<double>("best medR");
  c.selection.best_r1 = r.get<double>("best R@1");
  c.best_params = get_records(r, false);
  const std::size_t sum_at = r.offset();
  const auto stored = r.get<std::uint64_t>("checksum");
  if (stored != fnv1a(bytes.first(sum_at))) throw FormatError("checksum mismatch", sum_at);
  if (r.remaining() != 0) throw FormatError("trailing bytes after checksum", r.offset());
  return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  write_binary_file(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return deserialize_checkpoint(read_binary_file(path));
}

std::vector<ParamRecord> snapshot_parameters(const ParamList& params) {
  std::vector<ParamRecord> out;
  out.reserve(params.size());
  for (const NamedTensor& p : params) {
    const auto d = p.tensor.data();
    out.push_back({p.name, p.tensor.shape(), {d.begin(), d.end()}, {}, {}, 0});
  }
  return out;
}

void restore_parameters(const ParamList& params, std::span<const ParamRecord> records) {
  std::unordered_map<std::string, const ParamRecord*> by_name;
  for (const ParamRecord& r : records) by_name.emplace(r.name, &r);
  if (by_name.size() != params.size()) {
    throw FormatError("checkpoint holds " + std::to_string(by_name.size()) + " parameters, model has " +
                          std::to_string(params.size()),
                      0);
  }
  for (const NamedTensor& p : params) {
    const auto it = by_name.find(p.name);
    if (it == by_name.end()) throw FormatError("checkpoint lacks parameter " + p.name, 0);
    if (it->second->shape != p.tensor.shape()) {
      throw FormatError("parameter " + p.name + " has shape " + shape_str(it->second->shape) + " in checkpoint, " +
                            shape_str(p.tensor.shape()) + " in model",
                        0);
    }
    Tensor target = p.tensor;
    auto dst = target.mutable_data();
    std::copy(it->second->data.begin(), it->second->data.end(), dst.begin());
  }
}

}  // namespace xmodal

// Copyright 2026 The xmodal Authors
// SPDX-License-Identifier: Apache-2.0
//
// Checkpoint layout (little-endian):
//   "XMCKPT01"  u32 format_version  u64 epochs_completed
//   string config snapshot, u64 vocabulary size + strings
//   u64 #params, each: string name, u32 rank, u64 dims[rank], f64 data[n],
//       f64 adam_m[n], f64 adam_v[n], u64 adam_step
//   u8 has_best, u64 best_epoch, f64 best_medr, f64 best_r1
//   u64 #best params, each: string name, u32 rank, u64 dims[rank], f64 data[n]
//   u64 FNV-1a of all preceding bytes
// Strings are u64 length + bytes.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "xmodal/nn.hpp"

namespace xmodal {

struct ParamRecord {
  std::string name;
  Shape shape;
  std::vector<double> data;
  std::vector<double> adam_m, adam_v;  // empty for best-parameter records
  std::uint64_t adam_step = 0;
};

struct SelectionState {
  bool has_best = false;
  std::uint64_t best_epoch = 0;
  double best_medr = 0.0;
  double best_r1 = 0.0;
};

struct Checkpoint {
  static constexpr std::uint32_t kFormatVersion = 1;

  std::uint32_t format_version = kFormatVersion;
  std::uint64_t epoch = 0;  // epochs completed
  std::string config;       // config-file text
  std::vector<std::string> vocabulary;
  std::vector<ParamRecord> params;
  SelectionState selection;
  std::vector<ParamRecord> best_params;
};

std::vector<char> serialize_checkpoint(const Checkpoint& ckpt);
// Throws FormatError with the byte offset of the first bad field.
Checkpoint deserialize_checkpoint(std::span<const char> bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::vector<ParamRecord> snapshot_parameters(const ParamList& params);
// Copies values by name. Missing names or shape mismatches throw FormatError.
void restore_parameters(const ParamList& params, std::span<const ParamRecord> records);

}  // namespace xmodal

// Copyright 2026 The xmodal Authors
// SPDX-License-Identifier: Apache-2.0
//
// Experiment configuration. Every field is addressable as "section.key" and
// the same registry drives the config-file parser, command-line overrides and
// the snapshot stored in checkpoints.
//
// File syntax:
//   # comment
//   [train]
//   epochs = 20
//   margin = inc

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xmodal/corpus.hpp"
#include "xmodal/losses.hpp"
#include "xmodal/mmr.hpp"
#include "xmodal/recipe_encoder.hpp"
#include "xmodal/retrieval.hpp"

namespace xmodal {

struct ModelConfig {
  std::size_t model_dim = 64;
  std::size_t embed_dim = 64;
  std::size_t ff_dim = 128;
  std::size_t heads = 4;
  double dropout = 0.1;
  std::size_t sentence_layers = 2;
  std::size_t entity_layers = 2;
  std::size_t htd_layers = 2;
  HtdMode htd_mode = HtdMode::full;
  bool share_htd = true;
  bool positional_encoding = true;
  std::size_t max_title_tokens = 8;
  std::size_t max_ingredients = 12;
  std::size_t max_ingredient_tokens = 6;
  std::size_t max_instructions = 12;
  std::size_t max_instruction_tokens = 8;
  std::size_t image_size = 32;
  std::size_t channels = 3;
  std::size_t patch_size = 8;
  std::size_t image_layers = 2;
  bool use_mmr = true;
  MmrConfig mmr;
  std::uint64_t init_seed = 0;
};

struct TrainConfig {
  std::size_t epochs = 20;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  std::size_t freeze_image_epochs = 2;
  MarginPolicy margin;
  // L_sem uses a fixed margin unless semantic_follows_schedule is set.
  double semantic_margin = 0.3;
  bool semantic_follows_schedule = false;
  LossWeights weights;
  double labeled_fraction = 0.5;
  std::uint64_t seed = 0;
  std::size_t val_pairs = 32;
  std::size_t test_pairs = 100;
};

struct ExperimentConfig {
  CorpusSpec corpus;
  ModelConfig model;
  TrainConfig train;
  EvalConfig eval;

  void validate() const;
};

// Sets one field from its textual value. Throws ConfigError on an unknown key
// or a malformed value.
void set_field(ExperimentConfig& cfg, const std::string& dotted_key, const std::string& value);
std::string get_field(const ExperimentConfig& cfg, const std::string& dotted_key);
std::vector<std::string> field_names();

// Parses config text on top of `base`. Errors name the line number.
ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {});
// Every field in file syntax; parse_config(to_config_text(c)) reproduces c.
std::string to_config_text(const ExperimentConfig& cfg);

// Applies an ablation variant: full, no-htd, htd-v2, no-mmr, no-item, item-t,
// item-n, mtd-layers=N, margin=fixed|inc|ada.
void apply_variant(ExperimentConfig& cfg, const std::string& variant);

const char* htd_mode_name(HtdMode m);
const char* item_kv_mode_name(ItemKvMode m);
const char* margin_kind_name(MarginKind k);

RecipeEncoderConfig recipe_encoder_config(const ModelConfig& m, std::size_t vocab_size);
ImageEncoderConfig image_encoder_config(const ModelConfig& m);
MmrConfig mmr_config(const ModelConfig& m);

}  // namespace xmodal

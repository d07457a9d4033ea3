// Copyright 2026 The xmodal Authors
// SPDX-License-Identifier: Apache-2.0
//
// Synthetic paired corpus. Each pair comes from a latent dish: a class and an
// ordered ingredient subset. The recipe text is templated from the latent and
// the raster colours each 8×8 patch after one of the dish's ingredients, plus
// uniform noise.
//
// On disk a corpus is a directory with three files:
//   index.tsv    header line, then "id class recipe_offset recipe_length image_offset"
//   recipes.txt  one "@recipe <id>" ... "@end" block per pair, entity lines
//                prefixed "title\t", "ingredient\t" or "instruction\t"
//   images.bin   H·W·C bytes per pair, pixel value = byte / 255

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "xmodal/image_encoder.hpp"
#include "xmodal/recipe_encoder.hpp"

namespace xmodal {

struct CorpusSpec {
  std::size_t num_pairs = 512;
  std::size_t num_classes = 8;
  std::size_t num_ingredient_words = 24;
  double noise_level = 0.1;
  std::uint64_t seed = 0;
  std::size_t image_size = 32;
  std::size_t patch_size = 8;
  std::size_t channels = 3;
  std::size_t min_ingredients = 2;
  std::size_t max_ingredients = 5;

  void validate() const;
};

struct RecipeText {
  std::string title;
  std::vector<std::string> ingredients;
  std::vector<std::string> instructions;
};

struct CorpusRecord {
  std::uint64_t id = 0;
  std::int32_t class_label = 0;
  std::vector<std::int32_t> ingredient_ids;  // latent; not persisted
  RecipeText recipe;
  std::vector<std::uint8_t> raster;  // H·W·C, row-major, channel last
};

struct Corpus {
  std::size_t image_size = 32;
  std::size_t channels = 3;
  std::size_t num_classes = 0;
  std::vector<CorpusRecord> records;

  std::size_t size() const { return records.size(); }
};

Corpus generate_corpus(const CorpusSpec& spec);

void save_corpus(const Corpus& corpus, const std::filesystem::path& dir);
// Throws FormatError (with byte offset) on malformed files.
Corpus load_corpus(const std::filesystem::path& dir);

// Lower-cased whitespace tokens.
std::vector<std::string> tokenize(const std::string& sentence);

// Word-level vocabulary; id 0 is the out-of-vocabulary token.
class Vocabulary {
 public:
  static constexpr std::int32_t kUnknown = 0;

  Vocabulary();
  static Vocabulary build(const Corpus& corpus);
  static Vocabulary from_words(const std::vector<std::string>& words);

  std::int32_t id(const std::string& word) const;
  TokenIds encode(const std::string& sentence) const;
  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::int32_t> index_;
};

RecipeSample to_recipe_sample(const CorpusRecord& record, const Vocabulary& vocab, bool with_label = true);
ImageSample to_image_sample(const CorpusRecord& record, std::size_t image_size, std::size_t channels);

struct CorpusSplit {
  std::vector<std::size_t> train, val, test;
};
// Tail `test_pairs` records are the test split, the `val_pairs` before them
// are validation, the rest train.
CorpusSplit split_corpus(std::size_t corpus_size, std::size_t val_pairs, std::size_t test_pairs);

}  // namespace xmodal

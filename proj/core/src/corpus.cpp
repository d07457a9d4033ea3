// Copyright 2026 The xmodal Authors
// SPDX-License-Identifier: Apache-2.0

#include "xmodal/corpus.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace xmodal {

namespace {

constexpr const char* kIndexHeader = "# xmodal-corpus v1";

const std::vector<std::string> kClassWords = {"soup", "salad", "stew", "pie", "curry", "tart", "risotto", "casserole"};
const std::vector<std::string> kIngredientWords = {
    "tomato", "basil",   "garlic",  "onion",  "carrot",  "potato", "lemon",  "ginger", "spinach", "mushroom",
    "pepper", "cheese",  "butter",  "rice",   "chicken", "beef",   "salmon", "tofu",   "apple",   "pear",
    "honey",  "cinnamon", "almond", "olive",  "cabbage", "leek",   "corn",   "pea",    "bean",    "lentil",
    "mint",   "parsley"};
const std::vector<std::string> kAdjectives = {"easy", "quick", "classic", "rustic", "homemade", "simple"};
const std::vector<std::string> kQuantities = {"1", "2", "3", "4", "half"};
const std::vector<std::string> kUnits = {"cups", "tbsp", "tsp", "grams", "pinch"};
const std::vector<std::string> kVerbs = {"chop", "add", "stir", "slice", "mix", "dice"};

std::string word_or(const std::vector<std::string>& words, std::size_t i, const char* stem) {
  return i < words.size() ? words[i] : std::string(stem) + std::to_string(i);
}

template <typename T>
const T& pick(const std::vector<T>& v, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> d(0, v.size() - 1);
  return v[d(rng)];
}

std::vector<std::array<double, 3>> make_palette(std::size_t n, std::uint64_t seed) {
  std::vector<std::array<double, 3>> grid;
  const double levels[] = {0.1, 0.5, 0.9};
  for (double r : levels)
    for (double g : levels)
      for (double b : levels) grid.push_back({r, g, b});
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::shuffle(grid.begin(), grid.end(), rng);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::array<double, 3>> palette;
  for (std::size_t i = 0; i < n; ++i) {
    palette.push_back(i < grid.size() ? grid[i] : std::array<double, 3>{unit(rng), unit(rng), unit(rng)});
  }
  return palette;
}

std::uint8_t quantize(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

void CorpusSpec::validate() const {
  if (num_classes < 2) throw ConfigError("corpus: num_classes must be at least 2");
  if (num_pairs < num_classes) throw ConfigError("corpus: num_pairs must cover every class");
  if (num_ingredient_words < num_classes || num_ingredient_words < max_ingredients) {
    throw ConfigError("corpus: num_ingredient_words must be at least num_classes and max_ingredients");
  }
  if (min_ingredients < 1 || min_ingredients > max_ingredients) throw ConfigError("corpus: bad ingredient range");
  if (noise_level < 0.0 || noise_level > 1.0) throw ConfigError("corpus: noise_level outside [0,1]");
  if (patch_size == 0 || image_size % patch_size != 0 || channels != 3) {
    throw ConfigError("corpus: rasters are RGB with image_size a multiple of patch_size");
  }
}

Corpus generate_corpus(const CorpusSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const auto palette = make_palette(spec.num_ingredient_words, spec.seed);

  // Balanced class assignment: round robin, then shuffled.
  std::vector<std::int32_t> classes(spec.num_pairs);
  for (std::size_t i = 0; i < spec.num_pairs; ++i) classes[i] = static_cast<std::int32_t>(i % spec.num_classes);
  std::shuffle(classes.begin(), classes.end(), rng);

  Corpus corpus;
  corpus.image_size = spec.image_size;
  corpus.channels = spec.channels;
  corpus.num_classes = spec.num_classes;
  corpus.records.reserve(spec.num_pairs);
  std::uniform_int_distribution<std::size_t> count_dist(spec.min_ingredients, spec.max_ingredients);
  std::uniform_real_distribution<double> noise(-spec.noise_level, spec.noise_level);
  const std::size_t grid = spec.image_size / spec.patch_size;

  for (std::size_t i = 0; i < spec.num_pairs; ++i) {
    CorpusRecord rec;
    rec.id = i;
    rec.class_label = classes[i];
    // Each class has a signature ingredient; the rest are distinct draws.
    const std::size_t k = count_dist(rng);
    std::vector<std::int32_t> pool;
    for (std::size_t w = 0; w < spec.num_ingredient_words; ++w) {
      if (w != static_cast<std::size_t>(rec.class_label)) pool.push_back(static_cast<std::int32_t>(w));
    }
    std::shuffle(pool.begin(), pool.end(), rng);
    rec.ingredient_ids.push_back(rec.class_label);
    rec.ingredient_ids.insert(rec.ingredient_ids.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k - 1));
    std::shuffle(rec.ingredient_ids.begin(), rec.ingredient_ids.end(), rng);

    const std::string dish = word_or(kClassWords, static_cast<std::size_t>(rec.class_label), "dish");
    rec.recipe.title = pick(kAdjectives, rng) + " " + dish;
    for (std::int32_t ing : rec.ingredient_ids) {
      const std::string name = word_or(kIngredientWords, static_cast<std::size_t>(ing), "food");
      rec.recipe.ingredients.push_back(pick(kQuantities, rng) + " " + pick(kUnits, rng) + " " + name);
      rec.recipe.instructions.push_back(pick(kVerbs, rng) + " the " + name);
    }
    rec.recipe.instructions.push_back("serve the " + dish);

    // Patch colours depend on the ingredient set, not on its order.
    std::vector<std::int32_t> colours = rec.ingredient_ids;
    std::sort(colours.begin(), colours.end());
    rec.raster.resize(spec.image_size * spec.image_size * spec.channels);
    for (std::size_t y = 0; y < spec.image_size; ++y) {
      for (std::size_t x = 0; x < spec.image_size; ++x) {
        const std::size_t patch = (y / spec.patch_size) * grid + (x / spec.patch_size);
        const auto& color = palette[static_cast<std::size_t>(colours[patch % k])];
        for (std::size_t c = 0; c < spec.channels; ++c) {
          const double jitter = spec.noise_level > 0.0 ? noise(rng) : 0.0;
          rec.raster[(y * spec.image_size + x) * spec.channels + c] = quantize(color[c] + jitter);
        }
      }
    }
    corpus.records.push_back(std::move(rec));
  }
  return corpus;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream index(dir / "index.tsv");
  std::ofstream recipes(dir / "recipes.txt", std::ios::binary);
  std::ofstream images(dir / "images.bin", std::ios::binary);
  if (!index || !recipes || !images) throw InputError("save_corpus: cannot write into " + dir.string());
  index << kIndexHeader << " pairs=" << corpus.size() << " height=" << corpus.image_size
        << " width=" << corpus.image_size << " channels=" << corpus.channels << " classes=" << corpus.num_classes
        << '\n';
  std::uint64_t recipe_offset = 0, image_offset = 0;
  for (const CorpusRecord& rec : corpus.records) {
    std::ostringstream block;
    block << "@recipe " << rec.id << '\n' << "title\t" << rec.recipe.title << '\n';
    for (const std::string& s : rec.recipe.ingredients) block << "ingredient\t" << s << '\n';
    for (const std::string& s : rec.recipe.instructions) block << "instruction\t" << s << '\n';
    block << "@end\n";
    const std::string text = block.str();
    recipes << text;
    images.write(reinterpret_cast<const char*>(rec.raster.data()), static_cast<std::streamsize>(rec.raster.size()));
    index << rec.id << '\t' << rec.class_label << '\t' << recipe_offset << '\t' << text.size() << '\t'
          << image_offset << '\n';
    recipe_offset += text.size();
    image_offset += rec.raster.size();
  }
}

namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw InputError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RecipeText parse_recipe_block(const std::string& text, std::uint64_t offset, std::uint64_t expected_id) {
  RecipeText out;
  std::istringstream in(text);
  std::string line;
  std::uint64_t pos = offset;
  bool opened = false, closed = false;
  while (std::getline(in, line)) {
    const std::uint64_t line_start = pos;
    pos += line.size() + 1;
    if (!opened) {
      if (line != "@recipe " + std::to_string(expected_id)) {
        throw FormatError("recipes.txt: expected '@recipe " + std::to_string(expected_id) + "'", line_start);
      }
      opened = true;
      continue;
    }
    if (line == "@end") {
      closed = true;
      break;
    }
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw FormatError("recipes.txt: entity line without tab", line_start);
    const std::string kind = line.substr(0, tab);
    const std::string body = line.substr(tab + 1);
    if (kind == "title") {
      out.title = body;
    } else if (kind == "ingredient") {
      out.ingredients.push_back(body);
    } else if (kind == "instruction") {
      out.instructions.push_back(body);
    } else {
      throw FormatError("recipes.txt: unknown entity '" + kind + "'", line_start);
    }
  }
  if (!closed) throw FormatError("recipes.txt: unterminated recipe block", offset);
  return out;
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& dir) {
  const std::string index = read_file(dir / "index.tsv");
  const std::string recipes = read_file(dir / "recipes.txt");
  const std::string images = read_file(dir / "images.bin");

  std::istringstream in(index);
  std::string header;
  std::getline(in, header);
  if (header.rfind(kIndexHeader, 0) != 0) throw FormatError("index.tsv: missing corpus header", 0);
  Corpus corpus;
  std::size_t pairs = 0, height = 0, width = 0;
  {
    std::istringstream hs(header.substr(std::string(kIndexHeader).size()));
    std::string kv;
    while (hs >> kv) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw FormatError("index.tsv: malformed header field '" + kv + "'", 0);
      const std::string key = kv.substr(0, eq);
      const std::size_t value = std::stoull(kv.substr(eq + 1));
      if (key == "pairs") pairs = value;
      else if (key == "height") height = value;
      else if (key == "width") width = value;
      else if (key == "channels") corpus.channels = value;
      else if (key == "classes") corpus.num_classes = value;
    }
  }
  if (height == 0 || height != width) throw FormatError("index.tsv: rasters must be square", 0);
  corpus.image_size = height;
  const std::size_t raster_bytes = height * width * corpus.channels;

  std::uint64_t offset = header.size() + 1;
  std::string line;
  while (std::getline(in, line)) {
    const std::uint64_t line_start = offset;
    offset += line.size() + 1;
    if (line.empty()) continue;
    std::istringstream ls(line);
    CorpusRecord rec;
    std::uint64_t r_off = 0, r_len = 0, i_off = 0;
    if (!(ls >> rec.id >> rec.class_label >> r_off >> r_len >> i_off)) {
      throw FormatError("index.tsv: malformed record", line_start);
    }
    if (r_off + r_len > recipes.size()) throw FormatError("index.tsv: recipe range past end of recipes.txt", line_start);
    if (i_off + raster_bytes > images.size()) throw FormatError("index.tsv: image range past end of images.bin", line_start);
    rec.recipe = parse_recipe_block(recipes.substr(r_off, r_len), r_off, rec.id);
    rec.raster.assign(images.begin() + static_cast<std::ptrdiff_t>(i_off),
                      images.begin() + static_cast<std::ptrdiff_t>(i_off + raster_bytes));
    corpus.records.push_back(std::move(rec));
  }
  if (corpus.records.size() != pairs) {
    throw FormatError("index.tsv: header announces " + std::to_string(pairs) + " pairs, found " +
                          std::to_string(corpus.records.size()),
                      offset);
  }
  return corpus;
}

std::vector<std::string> tokenize(const std::string& sentence) {
  std::vector<std::string> out;
  std::istringstream in(sentence);
  std::string word;
  while (in >> word) {
    std::transform(word.begin(), word.end(), word.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    out.push_back(word);
  }
  return out;
}

Vocabulary::Vocabulary() : words_{"<unk>"} { index_.emplace("<unk>", kUnknown); }

Vocabulary Vocabulary::from_words(const std::vector<std::string>& words) {
  Vocabulary v;
  for (const std::string& w : words) {
    if (w == "<unk>") continue;
    if (v.index_.emplace(w, static_cast<std::int32_t>(v.words_.size())).second) v.words_.push_back(w);
  }
  return v;
}

Vocabulary Vocabulary::build(const Corpus& corpus) {
  std::set<std::string> seen;
  for (const CorpusRecord& rec : corpus.records) {
    auto add = [&](const std::string& s) {
      for (std::string& w : tokenize(s)) seen.insert(std::move(w));
    };
    add(rec.recipe.title);
    for (const std::string& s : rec.recipe.ingredients) add(s);
    for (const std::string& s : rec.recipe.instructions) add(s);
  }
  return from_words({seen.begin(), seen.end()});
}

std::int32_t Vocabulary::id(const std::string& word) const {
  const auto it = index_.find(word);
  return it == index_.end() ? kUnknown : it->second;
}

TokenIds Vocabulary::encode(const std::string& sentence) const {
  TokenIds ids;
  for (const std::string& w : tokenize(sentence)) ids.push_back(id(w));
  return ids;
}

RecipeSample to_recipe_sample(const CorpusRecord& record, const Vocabulary& vocab, bool with_label) {
  RecipeSample s;
  s.title = vocab.encode(record.recipe.title);
  for (const std::string& line : record.recipe.ingredients) s.ingredients.push_back(vocab.encode(line));
  for (const std::string& line : record.recipe.instructions) s.instructions.push_back(vocab.encode(line));
  if (with_label) s.class_label = record.class_label;
  s.validate(vocab.size());
  return s;
}

ImageSample to_image_sample(const CorpusRecord& record, std::size_t image_size, std::size_t channels) {
  const std::size_t n = image_size * image_size * channels;
  if (record.raster.size() != n) {
    throw DimensionError("raster of " + std::to_string(record.raster.size()) + " bytes, expected " + std::to_string(n));
  }
  std::vector<double> px(n);
  for (std::size_t i = 0; i < n; ++i) px[i] = static_cast<double>(record.raster[i]) / 255.0;
  return {Tensor::from({image_size, image_size, channels}, std::move(px))};
}

CorpusSplit split_corpus(std::size_t corpus_size, std::size_t val_pairs, std::size_t test_pairs) {
  if (val_pairs + test_pairs >= corpus_size) {
    throw InputError("split: " + std::to_string(val_pairs) + " validation + " + std::to_string(test_pairs) +
                     " test pairs leave no training data in a corpus of " + std::to_string(corpus_size));
  }
  CorpusSplit s;
  const std::size_t train_end = corpus_size - val_pairs - test_pairs;
  for (std::size_t i = 0; i < corpus_size; ++i) {
    if (i < train_end) s.train.push_back(i);
    else if (i < train_end + val_pairs) s.val.push_back(i);
    else s.test.push_back(i);
  }
  return s;
}

}  // namespace xmodal

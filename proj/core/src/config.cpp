// Copyright 2026 The xmodal Authors
// SPDX-License-Identifier: Apache-2.0

#include "xmodal/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "xmodal/errors.hpp"

namespace xmodal {

const char* htd_mode_name(HtdMode m) {
  switch (m) {
    case HtdMode::full: return "full";
    case HtdMode::v2: return "v2";
    case HtdMode::none: return "none";
  }
  return "?";
}

const char* item_kv_mode_name(ItemKvMode m) {
  switch (m) {
    case ItemKvMode::all: return "all";
    case ItemKvMode::title_only: return "title_only";
    case ItemKvMode::ingredients_only: return "ingredients_only";
  }
  return "?";
}

const char* margin_kind_name(MarginKind k) {
  switch (k) {
    case MarginKind::fixed: return "fixed";
    case MarginKind::inc: return "inc";
    case MarginKind::ada: return "ada";
  }
  return "?";
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
  throw ConfigError("config: " + key + " = '" + value + "' is not " + expected);
}

template <typename T>
T parse_integer(const std::string& key, const std::string& value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) bad_value(key, value, "a nonnegative integer");
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) bad_value(key, value, "a number");
    return v;
  } catch (const std::logic_error&) {
    bad_value(key, value, "a number");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "on" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "off" || value == "no") return false;
  bad_value(key, value, "a boolean");
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Field {
  std::string name;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string& key, const std::string& value)> set;
};

template <typename T, typename Access>
Field integer_field(std::string name, Access access) {
  return {std::move(name), [access](const ExperimentConfig& c) { return std::to_string(access(const_cast<ExperimentConfig&>(c))); },
          [access](ExperimentConfig& c, const std::string& k, const std::string& v) { access(c) = parse_integer<T>(k, v); }};
}

template <typename Access>
Field size_field(std::string name, Access access) {
  return integer_field<std::size_t>(std::move(name), access);
}

template <typename Access>
Field u64_field(std::string name, Access access) {
  return integer_field<std::uint64_t>(std::move(name), access);
}

template <typename Access>
Field double_field(std::string name, Access access) {
  return {std::move(name), [access](const ExperimentConfig& c) { return format_double(access(const_cast<ExperimentConfig&>(c))); },
          [access](ExperimentConfig& c, const std::string& k, const std::string& v) { access(c) = parse_double(k, v); }};
}

template <typename Access>
Field bool_field(std::string name, Access access) {
  return {std::move(name), [access](const ExperimentConfig& c) { return std::string(access(const_cast<ExperimentConfig&>(c)) ? "true" : "false"); },
          [access](ExperimentConfig& c, const std::string& k, const std::string& v) { access(c) = parse_bool(k, v); }};
}

template <typename E, typename Access>
Field enum_field(std::string name, std::vector<E> values, const char* (*to_name)(E), Access access) {
  return {std::move(name), [access, to_name](const ExperimentConfig& c) { return std::string(to_name(access(const_cast<ExperimentConfig&>(c)))); },
          [access, values, to_name](ExperimentConfig& c, const std::string& k, const std::string& v) {
            for (E e : values) {
              if (v == to_name(e)) {
                access(c) = e;
                return;
              }
            }
            std::string expected = "one of";
            for (E e : values) expected += std::string(" ") + to_name(e);
            bad_value(k, v, expected.c_str());
          }};
}

std::string directions_text(const std::vector<Direction>& dirs) {
  if (dirs.size() == 2) return "both";
  return dirs.empty() ? "" : direction_name(dirs.front());
}

#define XM_ACCESS(expr) [](ExperimentConfig& c) -> auto& { return expr; }

const std::vector<Field>& registry() {
  static const std::vector<Field> fields = [] {
    const std::vector<HtdMode> htd_modes{HtdMode::full, HtdMode::v2, HtdMode::none};
    const std::vector<ItemKvMode> kv_modes{ItemKvMode::all, ItemKvMode::title_only, ItemKvMode::ingredients_only};
    const std::vector<MarginKind> margins{MarginKind::fixed, MarginKind::inc, MarginKind::ada};
    std::vector<Field> f;
    f.push_back(size_field("corpus.num_pairs", XM_ACCESS(c.corpus.num_pairs)));
    f.push_back(size_field("corpus.num_classes", XM_ACCESS(c.corpus.num_classes)));
    f.push_back(size_field("corpus.num_ingredient_words", XM_ACCESS(c.corpus.num_ingredient_words)));
    f.push_back(double_field("corpus.noise_level", XM_ACCESS(c.corpus.noise_level)));
    f.push_back(u64_field("corpus.seed", XM_ACCESS(c.corpus.seed)));
    f.push_back(size_field("corpus.image_size", XM_ACCESS(c.corpus.image_size)));
    f.push_back(size_field("corpus.patch_size", XM_ACCESS(c.corpus.patch_size)));
    f.push_back(size_field("corpus.min_ingredients", XM_ACCESS(c.corpus.min_ingredients)));
    f.push_back(size_field("corpus.max_ingredients", XM_ACCESS(c.corpus.max_ingredients)));

    f.push_back(size_field("model.model_dim", XM_ACCESS(c.model.model_dim)));
    f.push_back(size_field("model.embed_dim", XM_ACCESS(c.model.embed_dim)));
    f.push_back(size_field("model.ff_dim", XM_ACCESS(c.model.ff_dim)));
    f.push_back(size_field("model.heads", XM_ACCESS(c.model.heads)));
    f.push_back(double_field("model.dropout", XM_ACCESS(c.model.dropout)));
    f.push_back(u64_field("model.init_seed", XM_ACCESS(c.model.init_seed)));
    f.push_back(bool_field("model.positional_encoding", XM_ACCESS(c.model.positional_encoding)));
    f.push_back(bool_field("model.use_mmr", XM_ACCESS(c.model.use_mmr)));

    f.push_back(size_field("recipe.sentence_layers", XM_ACCESS(c.model.sentence_layers)));
    f.push_back(size_field("recipe.entity_layers", XM_ACCESS(c.model.entity_layers)));
    f.push_back(size_field("recipe.htd_layers", XM_ACCESS(c.model.htd_layers)));
    f.push_back(enum_field("recipe.htd_mode", htd_modes, htd_mode_name, XM_ACCESS(c.model.htd_mode)));
    f.push_back(bool_field("recipe.share_htd", XM_ACCESS(c.model.share_htd)));
    f.push_back(size_field("recipe.max_title_tokens", XM_ACCESS(c.model.max_title_tokens)));
    f.push_back(size_field("recipe.max_ingredients", XM_ACCESS(c.model.max_ingredients)));
    f.push_back(size_field("recipe.max_ingredient_tokens", XM_ACCESS(c.model.max_ingredient_tokens)));
    f.push_back(size_field("recipe.max_instructions", XM_ACCESS(c.model.max_instructions)));
    f.push_back(size_field("recipe.max_instruction_tokens", XM_ACCESS(c.model.max_instruction_tokens)));

    f.push_back(size_field("image.image_size", XM_ACCESS(c.model.image_size)));
    f.push_back(size_field("image.channels", XM_ACCESS(c.model.channels)));
    f.push_back(size_field("image.patch_size", XM_ACCESS(c.model.patch_size)));
    f.push_back(size_field("image.layers", XM_ACCESS(c.model.image_layers)));

    f.push_back(size_field("mmr.item_layers", XM_ACCESS(c.model.mmr.item_layers)));
    f.push_back(size_field("mmr.item_heads", XM_ACCESS(c.model.mmr.item_heads)));
    f.push_back(size_field("mmr.mtd_layers", XM_ACCESS(c.model.mmr.mtd_layers)));
    f.push_back(size_field("mmr.mtd_heads", XM_ACCESS(c.model.mmr.mtd_heads)));
    f.push_back(size_field("mmr.mmr_dim", XM_ACCESS(c.model.mmr.mmr_dim)));
    f.push_back(size_field("mmr.ff_dim", XM_ACCESS(c.model.mmr.ff_dim)));
    f.push_back(double_field("mmr.dropout", XM_ACCESS(c.model.mmr.dropout_rate)));
    f.push_back(enum_field("mmr.item_kv_mode", kv_modes, item_kv_mode_name, XM_ACCESS(c.model.mmr.item_kv_mode)));
    f.push_back(bool_field("mmr.use_item", XM_ACCESS(c.model.mmr.use_item)));

    f.push_back(size_field("train.epochs", XM_ACCESS(c.train.epochs)));
    f.push_back(size_field("train.batch_size", XM_ACCESS(c.train.batch_size)));
    f.push_back(double_field("train.learning_rate", XM_ACCESS(c.train.learning_rate)));
    f.push_back(size_field("train.freeze_image_epochs", XM_ACCESS(c.train.freeze_image_epochs)));
    f.push_back(enum_field("train.margin", margins, margin_kind_name, XM_ACCESS(c.train.margin.kind)));
    f.push_back(double_field("train.alpha", XM_ACCESS(c.train.margin.alpha)));
    f.push_back(double_field("train.alpha_inc_start", XM_ACCESS(c.train.margin.alpha_inc_start)));
    f.push_back(double_field("train.alpha_inc_step", XM_ACCESS(c.train.margin.alpha_inc_step)));
    f.push_back(double_field("train.clamp_min", XM_ACCESS(c.train.margin.clamp_min)));
    f.push_back(double_field("train.clamp_max", XM_ACCESS(c.train.margin.clamp_max)));
    f.push_back(double_field("train.semantic_margin", XM_ACCESS(c.train.semantic_margin)));
    f.push_back(bool_field("train.semantic_follows_schedule", XM_ACCESS(c.train.semantic_follows_schedule)));
    f.push_back(double_field("train.lambda_sem", XM_ACCESS(c.train.weights.semantic)));
    f.push_back(double_field("train.lambda_itm", XM_ACCESS(c.train.weights.itm)));
    f.push_back(double_field("train.labeled_fraction", XM_ACCESS(c.train.labeled_fraction)));
    f.push_back(u64_field("train.seed", XM_ACCESS(c.train.seed)));
    f.push_back(size_field("train.val_pairs", XM_ACCESS(c.train.val_pairs)));
    f.push_back(size_field("train.test_pairs", XM_ACCESS(c.train.test_pairs)));

    f.push_back(size_field("eval.bag_size", XM_ACCESS(c.eval.bag_size)));
    f.push_back(size_field("eval.num_bags", XM_ACCESS(c.eval.num_bags)));
    f.push_back(u64_field("eval.seed", XM_ACCESS(c.eval.seed)));
    f.push_back({"eval.rerank_top_k",
                 [](const ExperimentConfig& c) { return std::to_string(c.eval.rerank_top_k.value_or(0)); },
                 [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                   const auto n = parse_integer<std::size_t>(k, v);
                   c.eval.rerank_top_k = n ? std::optional<std::size_t>(n) : std::nullopt;
                 }});
    f.push_back({"eval.directions", [](const ExperimentConfig& c) { return directions_text(c.eval.directions); },
                 [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                   if (v == "both") {
                     c.eval.directions = {Direction::image_to_recipe, Direction::recipe_to_image};
                   } else if (v == "image_to_recipe") {
                     c.eval.directions = {Direction::image_to_recipe};
                   } else if (v == "recipe_to_image") {
                     c.eval.directions = {Direction::recipe_to_image};
                   } else {
                     bad_value(k, v, "one of both image_to_recipe recipe_to_image");
                   }
                 }});
    return f;
  }();
  return fields;
}

#undef XM_ACCESS

const Field& find_field(const std::string& key) {
  for (const Field& f : registry()) {
    if (f.name == key) return f;
  }
  throw ConfigError("config: unknown key '" + key + "'");
}

}  // namespace

void ExperimentConfig::validate() const {
  corpus.validate();
  recipe_encoder_config(model, 2).validate();
  image_encoder_config(model).validate();
  if (model.use_mmr) model.mmr.validate();
  if (model.image_size != corpus.image_size || model.patch_size != corpus.patch_size ||
      model.channels != corpus.channels) {
    throw ConfigError("config: image.* geometry must match corpus.*");
  }
  if (train.batch_size < 2) throw ConfigError("config: train.batch_size must be at least 2");
  if (train.epochs == 0) throw ConfigError("config: train.epochs must be positive");
  if (!(train.learning_rate > 0.0)) throw ConfigError("config: train.learning_rate must be positive");
  if (train.labeled_fraction < 0.0 || train.labeled_fraction > 1.0) {
    throw ConfigError("config: train.labeled_fraction outside [0,1]");
  }
  if (train.margin.clamp_min > train.margin.clamp_max) throw ConfigError("config: train.clamp_min > train.clamp_max");
  if (eval.rerank_top_k && *eval.rerank_top_k > eval.bag_size) {
    throw ConfigError("config: eval.rerank_top_k exceeds eval.bag_size");
  }
}

void set_field(ExperimentConfig& cfg, const std::string& dotted_key, const std::string& value) {
  find_field(dotted_key).set(cfg, dotted_key, value);
}

std::string get_field(const ExperimentConfig& cfg, const std::string& dotted_key) {
  return find_field(dotted_key).get(cfg);
}

std::vector<std::string> field_names() {
  std::vector<std::string> out;
  for (const Field& f : registry()) out.push_back(f.name);
  return out;
}

ExperimentConfig parse_config(const std::string& text, ExperimentConfig base) {
  std::istringstream in(text);
  std::string line, section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("config line " + std::to_string(line_no) + ": unterminated section");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    if (!section.empty() && key.find('.') == std::string::npos) key = section + "." + key;
    try {
      set_field(base, key, trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return base;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::string to_config_text(const ExperimentConfig& cfg) {
  std::ostringstream out;
  std::string section;
  for (const Field& f : registry()) {
    const auto dot = f.name.find('.');
    const std::string s = f.name.substr(0, dot);
    if (s != section) {
      if (!section.empty()) out << '\n';
      out << '[' << s << "]\n";
      section = s;
    }
    out << f.name.substr(dot + 1) << " = " << f.get(cfg) << '\n';
  }
  return out.str();
}

void apply_variant(ExperimentConfig& cfg, const std::string& variant) {
  if (variant == "full") return;
  if (variant == "no-htd") {
    cfg.model.htd_mode = HtdMode::none;
  } else if (variant == "htd-v2") {
    cfg.model.htd_mode = HtdMode::v2;
  } else if (variant == "no-mmr") {
    cfg.model.use_mmr = false;
    cfg.train.weights.itm = 0.0;
  } else if (variant == "no-item") {
    cfg.model.mmr.use_item = false;
  } else if (variant == "item-t") {
    cfg.model.mmr.item_kv_mode = ItemKvMode::title_only;
  } else if (variant == "item-n") {
    cfg.model.mmr.item_kv_mode = ItemKvMode::ingredients_only;
  } else if (variant.rfind("mtd-layers=", 0) == 0) {
    set_field(cfg, "mmr.mtd_layers", variant.substr(11));
  } else if (variant.rfind("margin=", 0) == 0) {
    set_field(cfg, "train.margin", variant.substr(7));
  } else {
    throw ConfigError("unknown ablation variant '" + variant + "'");
  }
}

RecipeEncoderConfig recipe_encoder_config(const ModelConfig& m, std::size_t vocab_size) {
  RecipeEncoderConfig r;
  r.vocab_size = vocab_size;
  r.model_dim = m.model_dim;
  r.embed_dim = m.embed_dim;
  r.sentence = {m.heads, m.model_dim, m.ff_dim, m.sentence_layers, m.dropout};
  r.entity = {m.heads, m.model_dim, m.ff_dim, m.entity_layers, m.dropout};
  r.htd = {m.heads, m.model_dim, m.ff_dim, m.htd_layers, m.dropout};
  r.htd_mode = m.htd_mode;
  r.share_htd = m.share_htd;
  r.positional_encoding = m.positional_encoding;
  r.max_title_tokens = m.max_title_tokens;
  r.max_ingredients = m.max_ingredients;
  r.max_ingredient_tokens = m.max_ingredient_tokens;
  r.max_instructions = m.max_instructions;
  r.max_instruction_tokens = m.max_instruction_tokens;
  return r;
}

ImageEncoderConfig image_encoder_config(const ModelConfig& m) {
  ImageEncoderConfig c;
  c.image_size = m.image_size;
  c.channels = m.channels;
  c.patch_size = m.patch_size;
  c.model_dim = m.model_dim;
  c.embed_dim = m.embed_dim;
  c.encoder = {m.heads, m.model_dim, m.ff_dim, m.image_layers, m.dropout};
  c.positional_encoding = m.positional_encoding;
  return c;
}

MmrConfig mmr_config(const ModelConfig& m) { return m.mmr; }

}  // namespace xmodal

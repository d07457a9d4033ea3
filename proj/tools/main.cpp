// Copyright 2026 The xmodal Authors
// SPDX-License-Identifier: Apache-2.0
//
// xmodal command-line tool.
//
//   xmodal gen-data --out DIR [--num-pairs N ...]
//   xmodal train    --corpus DIR --out CKPT [--config FILE] [--resume CKPT] [--set k=v ...]
//   xmodal export   --ckpt CKPT --corpus DIR --out FILE [--split test]
//   xmodal eval     --emb FILE [--rerank-top-k K --ckpt CKPT --corpus DIR]
//   xmodal ablate   --variant V [--seeds 3] [--corpus DIR] [--config FILE]
//
// Failures print one line, error: kind=<kind> msg="<text>", and exit nonzero.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "xmodal/config.hpp"
#include "xmodal/corpus.hpp"
#include "xmodal/embeddings.hpp"
#include "xmodal/model.hpp"
#include "xmodal/retrieval.hpp"
#include "xmodal/trainer.hpp"

namespace {

using namespace xmodal;

int report_error(const char* kind, const std::string& what) {
  std::string msg;
  for (char c : what) {
    if (c == '"' || c == '\\') msg += '\\';
    msg += (c == '\n' || c == '\r') ? ' ' : c;
  }
  std::cerr << "error: kind=" << kind << " msg=\"" << msg << "\"\n";
  return 2;
}

struct ConfigInputs {
  std::string config_path;
  std::vector<std::string> sets;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "Config file (key = value with [sections])");
    cmd->add_option("--set", sets, "Override: section.key=value (repeatable)");
  }

  ExperimentConfig build(ExperimentConfig base = {}) const {
    ExperimentConfig cfg = config_path.empty() ? base : load_config(config_path, base);
    for (const std::string& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects section.key=value, got '" + kv + "'");
      set_field(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    return cfg;
  }
};

Corpus corpus_from(const std::string& dir, const ExperimentConfig& cfg) {
  return dir.empty() ? generate_corpus(cfg.corpus) : load_corpus(dir);
}

std::vector<std::size_t> split_rows(const CorpusSplit& split, std::size_t corpus_size, const std::string& which) {
  if (which == "train") return split.train;
  if (which == "val") return split.val;
  if (which == "test") return split.test;
  if (which == "all") {
    std::vector<std::size_t> all(corpus_size);
    for (std::size_t i = 0; i < corpus_size; ++i) all[i] = i;
    return all;
  }
  throw ConfigError("--split must be train, val, test or all");
}

void print_epoch(const EpochRecord& r) {
  std::printf("epoch %3zu  loss %.4f (itc %.4f sem %.4f itm %.4f)  margin %.3f  delta %zu/%zu%s", r.epoch,
              r.mean_total, r.mean_itc, r.mean_semantic, r.mean_itm, r.margin, r.delta_r, r.delta_v,
              r.image_frozen ? "  [image frozen]" : "");
  if (r.validated) {
    std::printf("  val i2r medR %.1f R@1 %.1f%s", r.val_image_to_recipe.medr, r.val_image_to_recipe.r1,
                r.improved ? " *" : "");
  }
  std::printf("\n");
  std::fflush(stdout);
}

int cmd_gen_data(const std::string& out, const ExperimentConfig& cfg) {
  const Corpus corpus = generate_corpus(cfg.corpus);
  save_corpus(corpus, out);
  std::printf("wrote %zu pairs (%zu classes) to %s\n", corpus.size(), corpus.num_classes, out.c_str());
  return 0;
}

int cmd_train(const ConfigInputs& inputs, const std::string& corpus_dir, const std::string& out,
              const std::string& resume, const std::string& log_path) {
  std::optional<Trainer> trainer;
  ExperimentConfig cfg;
  std::optional<Corpus> corpus;
  if (!resume.empty()) {
    Checkpoint ckpt = load_checkpoint(resume);
    ConfigInputs overrides{"", inputs.sets};
    cfg = overrides.build(parse_config(ckpt.config));
    ckpt.config = to_config_text(cfg);
    corpus = corpus_from(corpus_dir, cfg);
    trainer.emplace(ckpt, *corpus);
  } else {
    cfg = inputs.build();
    corpus = corpus_from(corpus_dir, cfg);
    trainer.emplace(cfg, *corpus);
  }
  std::ofstream log;
  if (!log_path.empty()) {
    log.open(log_path, resume.empty() ? std::ios::trunc : std::ios::app);
    if (!log) throw InputError("cannot open metrics log " + log_path);
  }
  trainer->run([&](const EpochRecord& r) {
    print_epoch(r);
    if (log) log << epoch_jsonl(r) << '\n' << std::flush;
    save_checkpoint(trainer->checkpoint(), out);
  });
  const CrossModalModel best = trainer->best_model();
  EvalConfig ec = cfg.eval;
  ec.rerank_top_k.reset();
  ec.bag_size = std::min(ec.bag_size, trainer->split().test.size());
  const EvalReport report = evaluate_rows(best, *corpus, trainer->vocabulary(), trainer->split().test, ec);
  std::printf("test split (selected epoch %llu):\n%s",
              static_cast<unsigned long long>(trainer->selection().best_epoch), format_report(report).c_str());
  return 0;
}

int cmd_export(const std::string& ckpt_path, const std::string& corpus_dir, const std::string& out,
               const std::string& which, bool last) {
  const LoadedModel lm = load_model(load_checkpoint(ckpt_path), !last);
  const Corpus corpus = corpus_from(corpus_dir, lm.config);
  const CorpusSplit split = split_corpus(corpus.size(), lm.config.train.val_pairs, lm.config.train.test_pairs);
  const std::vector<std::size_t> rows = split_rows(split, corpus.size(), which);
  const EmbeddingPair emb = encode_embeddings(*lm.model, corpus, lm.vocabulary, rows);
  EmbeddingFile file{emb.recipe, emb.image, {}};
  for (std::size_t r : rows) file.pair_ids.push_back(corpus.records[r].id);
  save_embeddings(file, out);
  std::printf("wrote %zu × %zu embeddings to %s\n", emb.recipe.rows(), emb.recipe.cols(), out.c_str());
  return 0;
}

int cmd_eval(const std::string& emb_path, EvalConfig ec, std::size_t rerank_k, const std::string& ckpt_path,
             const std::string& corpus_dir, const std::string& json_path) {
  const EmbeddingFile emb = load_embeddings(emb_path);
  EvalReport report;
  if (rerank_k > 0) {
    if (ckpt_path.empty()) throw ConfigError("--rerank-top-k needs --ckpt (the regularizer scores candidates)");
    ec.rerank_top_k = rerank_k;
    const LoadedModel lm = load_model(load_checkpoint(ckpt_path), true);
    const Corpus corpus = corpus_from(corpus_dir, lm.config);
    std::vector<std::size_t> rows;
    for (std::uint64_t id : emb.pair_ids) {
      if (id >= corpus.size()) throw InputError("embedding pair id " + std::to_string(id) + " is not in the corpus");
      rows.push_back(static_cast<std::size_t>(id));
    }
    const MatchScorer scorer(*lm.model, corpus, lm.vocabulary, rows);
    const PairScorer fn = [&scorer](std::size_t r, std::size_t i) { return scorer(r, i); };
    report = evaluate(emb.recipe, emb.image, ec, &fn);
  } else {
    report = evaluate(emb.recipe, emb.image, ec, nullptr);
  }
  std::printf("%s", format_report(report).c_str());
  if (!json_path.empty()) {
    std::ofstream out(json_path);
    if (!out) throw InputError("cannot write " + json_path);
    out << report_jsonl(report);
  }
  return 0;
}

int cmd_ablate(const ConfigInputs& inputs, const std::string& corpus_dir, const std::vector<std::string>& variants,
               std::size_t seeds, const std::string& json_path) {
  const ExperimentConfig base = inputs.build();
  const Corpus corpus = corpus_from(corpus_dir, base);
  std::ofstream json;
  if (!json_path.empty()) {
    json.open(json_path);
    if (!json) throw InputError("cannot write " + json_path);
  }
  for (const std::string& variant : variants) {
    double r1_sum = 0.0, medr_sum = 0.0;
    for (std::size_t s = 0; s < seeds; ++s) {
      ExperimentConfig cfg = base;
      apply_variant(cfg, variant);
      cfg.model.init_seed = base.model.init_seed + s;
      cfg.train.seed = base.train.seed + s;
      Trainer trainer(cfg, corpus);
      trainer.run();
      EvalConfig ec = cfg.eval;
      ec.rerank_top_k.reset();
      ec.bag_size = std::min(ec.bag_size, trainer.split().test.size());
      const CrossModalModel best = trainer.best_model();
      const Metrics m =
          evaluate_rows(best, corpus, trainer.vocabulary(), trainer.split().test, ec).at(Direction::image_to_recipe).mean;
      std::printf("%-16s seed %zu  i2r medR %6.2f  R@1 %6.2f  R@5 %6.2f  R@10 %6.2f\n", variant.c_str(), s, m.medr,
                  m.r1, m.r5, m.r10);
      std::fflush(stdout);
      r1_sum += m.r1;
      medr_sum += m.medr;
      if (json) {
        json << nlohmann::json{{"variant", variant}, {"seed", s}, {"medR", m.medr}, {"R@1", m.r1},
                               {"R@5", m.r5},       {"R@10", m.r10}}
                    .dump()
             << '\n';
      }
    }
    const double n = static_cast<double>(seeds);
    std::printf("%-16s mean  i2r medR %6.2f  R@1 %6.2f\n", variant.c_str(), medr_sum / n, r1_sum / n);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-modal recipe/image retrieval toolkit"};
  app.require_subcommand(1);

  ConfigInputs gen_inputs, train_inputs, ablate_inputs;

  auto* gen = app.add_subcommand("gen-data", "Generate the synthetic paired corpus");
  std::string gen_out;
  std::optional<std::size_t> num_pairs, num_classes, num_words;
  std::optional<double> noise;
  std::optional<std::uint64_t> corpus_seed;
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--num-pairs", num_pairs);
  gen->add_option("--num-classes", num_classes);
  gen->add_option("--num-ingredient-words", num_words);
  gen->add_option("--noise", noise, "Uniform pixel noise amplitude");
  gen->add_option("--seed", corpus_seed);
  gen_inputs.add_to(gen);

  auto* train = app.add_subcommand("train", "Train the dual encoders");
  std::string train_corpus, train_out, resume, log_path;
  std::optional<std::size_t> epochs, batch_size, freeze;
  std::optional<double> lr, lambda_sem, lambda_itm;
  std::optional<std::string> margin;
  std::optional<std::uint64_t> train_seed;
  train->add_option("--corpus", train_corpus, "Corpus directory (generated from [corpus] when omitted)");
  train->add_option("--out", train_out, "Checkpoint path, rewritten after every epoch")->required();
  train->add_option("--resume", resume, "Continue from this checkpoint");
  train->add_option("--log", log_path, "Per-epoch metrics log (JSONL)");
  train->add_option("--epochs", epochs);
  train->add_option("--batch-size", batch_size);
  train->add_option("--lr", lr);
  train->add_option("--freeze-image-epochs", freeze);
  train->add_option("--margin", margin, "fixed, inc or ada");
  train->add_option("--lambda-sem", lambda_sem);
  train->add_option("--lambda-itm", lambda_itm);
  train->add_option("--seed", train_seed);
  train_inputs.add_to(train);

  auto* exp = app.add_subcommand("export", "Write embeddings of a corpus split");
  std::string exp_ckpt, exp_corpus, exp_out, exp_split = "test";
  bool exp_last = false;
  exp->add_option("--ckpt", exp_ckpt)->required();
  exp->add_option("--corpus", exp_corpus);
  exp->add_option("--out", exp_out)->required();
  exp->add_option("--split", exp_split, "train, val, test or all");
  exp->add_flag("--last", exp_last, "Use the last parameters instead of the selected ones");

  auto* ev = app.add_subcommand("eval", "Retrieval metrics over random bags");
  std::string ev_emb, ev_ckpt, ev_corpus, ev_json, ev_dirs = "both";
  EvalConfig ev_cfg;
  std::size_t rerank_k = 0;
  ev->add_option("--emb", ev_emb)->required();
  ev->add_option("--bag-size", ev_cfg.bag_size);
  ev->add_option("--num-bags", ev_cfg.num_bags);
  ev->add_option("--seed", ev_cfg.seed);
  ev->add_option("--directions", ev_dirs, "both, image_to_recipe or recipe_to_image");
  ev->add_option("--rerank-top-k", rerank_k, "Re-rank the top K candidates with the match scorer");
  ev->add_option("--ckpt", ev_ckpt, "Checkpoint providing the match scorer");
  ev->add_option("--corpus", ev_corpus);
  ev->add_option("--json", ev_json, "Write per-bag and summary records (JSONL)");

  auto* abl = app.add_subcommand("ablate", "Train and test configuration variants over seeds");
  std::string abl_corpus, abl_json;
  std::vector<std::string> variants;
  std::size_t seeds = 3;
  std::optional<std::size_t> abl_epochs;
  abl->add_option("--variant", variants,
                  "full, no-htd, htd-v2, no-mmr, no-item, item-t, item-n, mtd-layers=N, margin=fixed|inc|ada")
      ->required();
  abl->add_option("--seeds", seeds, "Number of seeds per variant");
  abl->add_option("--corpus", abl_corpus);
  abl->add_option("--epochs", abl_epochs);
  abl->add_option("--json", abl_json);
  ablate_inputs.add_to(abl);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("usage", e.what());
  }

  try {
    if (gen->parsed()) {
      ExperimentConfig cfg = gen_inputs.build();
      if (num_pairs) cfg.corpus.num_pairs = *num_pairs;
      if (num_classes) cfg.corpus.num_classes = *num_classes;
      if (num_words) cfg.corpus.num_ingredient_words = *num_words;
      if (noise) cfg.corpus.noise_level = *noise;
      if (corpus_seed) cfg.corpus.seed = *corpus_seed;
      return cmd_gen_data(gen_out, cfg);
    }
    if (train->parsed()) {
      auto push = [&](const char* key, const std::string& value) { train_inputs.sets.push_back(std::string(key) + "=" + value); };
      auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
      };
      if (epochs) push("train.epochs", std::to_string(*epochs));
      if (batch_size) push("train.batch_size", std::to_string(*batch_size));
      if (lr) push("train.learning_rate", num(*lr));
      if (freeze) push("train.freeze_image_epochs", std::to_string(*freeze));
      if (margin) push("train.margin", *margin);
      if (lambda_sem) push("train.lambda_sem", num(*lambda_sem));
      if (lambda_itm) push("train.lambda_itm", num(*lambda_itm));
      if (train_seed) push("train.seed", std::to_string(*train_seed));
      return cmd_train(train_inputs, train_corpus, train_out, resume, log_path);
    }
    if (exp->parsed()) return cmd_export(exp_ckpt, exp_corpus, exp_out, exp_split, exp_last);
    if (ev->parsed()) {
      ExperimentConfig tmp;
      set_field(tmp, "eval.directions", ev_dirs);
      ev_cfg.directions = tmp.eval.directions;
      return cmd_eval(ev_emb, ev_cfg, rerank_k, ev_ckpt, ev_corpus, ev_json);
    }
    if (abl->parsed()) {
      if (seeds == 0) throw ConfigError("--seeds must be positive");
      if (abl_epochs) ablate_inputs.sets.push_back("train.epochs=" + std::to_string(*abl_epochs));
      return cmd_ablate(ablate_inputs, abl_corpus, variants, seeds, abl_json);
    }
  } catch (const Error& e) {
    return report_error(e.kind(), e.what());
  } catch (const std::exception& e) {
    return report_error("internal", e.what());
  }
  return 0;
}

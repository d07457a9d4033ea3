// Copyright 2026 The xmodal Authors
// SPDX-License-Identifier: Apache-2.0
//
// Training loop. Each step encodes a batch in training mode and computes the
// following losses:
//   L_itc  batch-all triplets at the scheduled margin
//   L_sem  triplets over the labelled part of the batch
//   L_itm  match classification of B positives and 2B hardest negatives
// One Adam update per step. Randomness is derived from (seed, epoch, step), so
// a run resumed from a checkpoint replays the unbroken run exactly.

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "xmodal/checkpoint.hpp"
#include "xmodal/config.hpp"
#include "xmodal/corpus.hpp"
#include "xmodal/model.hpp"
#include "xmodal/optimizer.hpp"
#include "xmodal/retrieval.hpp"

namespace xmodal {

struct StepRecord {
  double total = 0.0;
  double itc = 0.0;
  double semantic = 0.0;
  double itm = 0.0;
  double margin = 0.0;
  TripletBatchStats itc_stats;
  TripletBatchStats semantic_stats;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double margin = 0.0;  // margin of the epoch's first step
  double semantic_margin = 0.0;
  bool image_frozen = false;
  std::vector<StepRecord> steps;
  double mean_total = 0.0, mean_itc = 0.0, mean_semantic = 0.0, mean_itm = 0.0;
  std::size_t delta_r = 0, delta_v = 0;  // summed over steps
  bool validated = false;
  Metrics val_image_to_recipe, val_recipe_to_image;
  bool improved = false;
  std::uint64_t image_fingerprint = 0;
};

// One JSON object per line; no timing fields, so equal runs give equal logs.
std::string epoch_jsonl(const EpochRecord& r);

class Trainer {
 public:
  // Fresh run. The vocabulary is built from the training split. `corpus` must
  // outlive the trainer.
  Trainer(ExperimentConfig cfg, const Corpus& corpus);
  // Continues from a checkpoint written by checkpoint().
  Trainer(const Checkpoint& ckpt, const Corpus& corpus);

  EpochRecord run_epoch();
  bool finished() const { return epoch_ >= cfg_.train.epochs; }
  // Runs the remaining epochs, calling on_epoch after each.
  std::vector<EpochRecord> run(const std::function<void(const EpochRecord&)>& on_epoch = {});

  // One optimizer step on the given corpus rows.
  StepRecord train_step(std::span<const std::size_t> rows, std::size_t epoch, std::size_t step);

  Checkpoint checkpoint() const;
  // Model with the parameters that scored best on validation (the current
  // parameters when nothing was validated).
  CrossModalModel best_model() const;

  const ExperimentConfig& config() const { return cfg_; }
  const CrossModalModel& model() const { return *model_; }
  const Vocabulary& vocabulary() const { return vocab_; }
  const CorpusSplit& split() const { return split_; }
  std::size_t epochs_completed() const { return epoch_; }
  const SelectionState& selection() const { return selection_; }

 private:
  void init(const Checkpoint* ckpt);
  void set_image_frozen(bool frozen);
  double margin_for(std::size_t epoch, const Tensor& recipe_emb, const Tensor& image_emb) const;

  ExperimentConfig cfg_;
  const Corpus* corpus_;
  Vocabulary vocab_;
  CorpusSplit split_;
  std::unique_ptr<CrossModalModel> model_;
  std::unique_ptr<Adam> optimizer_;
  std::size_t epoch_ = 0;
  SelectionState selection_;
  std::vector<ParamRecord> best_params_;
};

// Rebuilds the model stored in a checkpoint. `use_best` picks the selected
// parameters when the checkpoint has them.
struct LoadedModel {
  ExperimentConfig config;
  Vocabulary vocabulary;
  std::unique_ptr<CrossModalModel> model;
};
LoadedModel load_model(const Checkpoint& ckpt, bool use_best = true);

// Evaluates the model on corpus rows. With cfg.rerank_top_k set the model
// must carry its regularizer.
EvalReport evaluate_rows(const CrossModalModel& model, const Corpus& corpus, const Vocabulary& vocab,
                         std::span<const std::size_t> rows, const EvalConfig& cfg);

}  // namespace xmodal

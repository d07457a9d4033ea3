// Copyright 2026 The xmodal Authors
// SPDX-License-Identifier: Apache-2.0

#include "xmodal/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "xmodal/ops.hpp"

namespace xmodal {

namespace {

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t epoch, std::uint64_t step, std::uint64_t purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(step),
                    static_cast<std::uint32_t>(purpose)};
  return std::mt19937_64(seq);
}

Corpus train_only(const Corpus& corpus, std::span<const std::size_t> rows) {
  Corpus c;
  c.image_size = corpus.image_size;
  c.channels = corpus.channels;
  c.num_classes = corpus.num_classes;
  for (std::size_t r : rows) c.records.push_back(corpus.records.at(r));
  return c;
}

bool better(const Metrics& m, const SelectionState& s) {
  if (!s.has_best) return true;
  if (m.medr != s.best_medr) return m.medr < s.best_medr;
  return m.r1 > s.best_r1;
}

nlohmann::json metrics_json(const Metrics& m) {
  return {{"medR", m.medr}, {"R@1", m.r1}, {"R@5", m.r5}, {"R@10", m.r10}};
}

}  // namespace

std::string epoch_jsonl(const EpochRecord& r) {
  nlohmann::json j;
  j["epoch"] = r.epoch;
  j["margin"] = r.margin;
  j["semantic_margin"] = r.semantic_margin;
  j["image_frozen"] = r.image_frozen;
  j["steps"] = r.steps.size();
  j["loss"] = r.mean_total;
  j["loss_itc"] = r.mean_itc;
  j["loss_sem"] = r.mean_semantic;
  j["loss_itm"] = r.mean_itm;
  j["delta_r"] = r.delta_r;
  j["delta_v"] = r.delta_v;
  nlohmann::json steps = nlohmann::json::array();
  for (const StepRecord& s : r.steps) steps.push_back(s.total);
  j["step_losses"] = steps;
  if (r.validated) {
    j["val"] = {{"image_to_recipe", metrics_json(r.val_image_to_recipe)},
                {"recipe_to_image", metrics_json(r.val_recipe_to_image)}};
    j["selected"] = r.improved;
  }
  char fp[17];
  std::snprintf(fp, sizeof fp, "%016llx", static_cast<unsigned long long>(r.image_fingerprint));
  j["image_param_hash"] = fp;
  return j.dump();
}

Trainer::Trainer(ExperimentConfig cfg, const Corpus& corpus) : cfg_(std::move(cfg)), corpus_(&corpus) {
  init(nullptr);
}

Trainer::Trainer(const Checkpoint& ckpt, const Corpus& corpus)
    : cfg_(parse_config(ckpt.config)), corpus_(&corpus) {
  init(&ckpt);
}

void Trainer::init(const Checkpoint* ckpt) {
  cfg_.validate();
  if (corpus_->image_size != cfg_.model.image_size || corpus_->channels != cfg_.model.channels) {
    throw ConfigError("corpus rasters are " + std::to_string(corpus_->image_size) + "px×" +
                      std::to_string(corpus_->channels) + " but the model expects " +
                      std::to_string(cfg_.model.image_size) + "px×" + std::to_string(cfg_.model.channels));
  }
  split_ = split_corpus(corpus_->size(), cfg_.train.val_pairs, cfg_.train.test_pairs);
  if (split_.train.size() < 2) throw InputError("training split needs at least two pairs");
  vocab_ = ckpt ? Vocabulary::from_words(ckpt->vocabulary) : Vocabulary::build(train_only(*corpus_, split_.train));
  model_ = std::make_unique<CrossModalModel>(cfg_.model, vocab_.size());
  optimizer_ = std::make_unique<Adam>(model_->parameters(), AdamConfig{cfg_.train.learning_rate});
  if (!ckpt) return;

  restore_parameters(model_->parameters(), ckpt->params);
  const ParamList& params = optimizer_->params();
  auto& slots = optimizer_->slots();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto it = std::find_if(ckpt->params.begin(), ckpt->params.end(),
                                 [&](const ParamRecord& r) { return r.name == params[i].name; });
    slots[i].m = it->adam_m;
    slots[i].v = it->adam_v;
    slots[i].step = it->adam_step;
  }
  epoch_ = ckpt->epoch;
  selection_ = ckpt->selection;
  best_params_ = ckpt->best_params;
}

void Trainer::set_image_frozen(bool frozen) {
  for (NamedTensor& p : model_->image_parameters()) p.tensor.set_requires_grad(!frozen);
}

double Trainer::margin_for(std::size_t epoch, const Tensor& recipe_emb, const Tensor& image_emb) const {
  std::size_t delta = 0;
  if (cfg_.train.margin.kind == MarginKind::ada) {
    delta = count_active_triplets(recipe_emb, image_emb, cfg_.train.margin.alpha).total();
  }
  return margin_at(cfg_.train.margin, epoch, delta);
}

StepRecord Trainer::train_step(std::span<const std::size_t> rows, std::size_t epoch, std::size_t step) {
  const std::size_t b = rows.size();
  if (b < 2) throw InputError("train_step: batch needs at least two pairs");
  std::mt19937_64 rng = stream(cfg_.train.seed, epoch, step, 1);
  const ForwardContext ctx{true, &rng, nullptr, nullptr};
  const auto labeled = static_cast<std::size_t>(std::ceil(cfg_.train.labeled_fraction * static_cast<double>(b)));

  std::vector<RecipeTokens> recipes(b);
  std::vector<ImageTokens> images(b);
  std::vector<Tensor> recipe_emb(b), image_emb(b);
  std::vector<std::optional<std::int32_t>> labels(b);
  for (std::size_t i = 0; i < b; ++i) {
    const CorpusRecord& rec = corpus_->records.at(rows[i]);
    const RecipeSample sample = to_recipe_sample(rec, vocab_, i < labeled);
    labels[i] = sample.class_label;
    recipes[i] = model_->recipe().encode(sample, ctx);
    images[i] = model_->image().encode(to_image_sample(rec, corpus_->image_size, corpus_->channels), ctx);
    recipe_emb[i] = recipes[i].embedding;
    image_emb[i] = images[i].embedding;
  }
  const Tensor e_r = concat(recipe_emb, 0);
  const Tensor e_v = concat(image_emb, 0);

  StepRecord out;
  out.margin = margin_for(epoch, e_r.detach(), e_v.detach());
  const double sem_margin = cfg_.train.semantic_follows_schedule ? out.margin : cfg_.train.semantic_margin;
  const TripletLossResult itc = itc_loss(e_r, e_v, out.margin);
  out.itc_stats = itc.stats;
  Tensor sem;
  if (cfg_.train.weights.semantic != 0.0) {
    const TripletLossResult s = semantic_loss(e_r, e_v, labels, sem_margin);
    sem = s.loss;
    out.semantic_stats = s.stats;
  }
  Tensor itm;
  if (model_->has_mmr() && cfg_.train.weights.itm != 0.0) {
    const MultimodalRegularizer& mmr = model_->mmr();
    const HardNegatives hard = select_hard_negatives(e_r.detach(), e_v.detach());
    std::vector<ProjectedRecipe> pr(b);
    std::vector<TokenSequence> pi(b);
    for (std::size_t i = 0; i < b; ++i) {
      pr[i] = mmr.project_recipe(recipes[i]);
      pi[i] = mmr.project_image(images[i].tokens);
    }
    std::vector<MatchScore> pos, neg;
    for (std::size_t i = 0; i < b; ++i) pos.push_back(mmr.match(pr[i], pi[i], ctx));
    for (std::size_t i = 0; i < b; ++i) neg.push_back(mmr.match(pr[hard.recipe_for_image[i]], pi[i], ctx));
    for (std::size_t i = 0; i < b; ++i) neg.push_back(mmr.match(pr[i], pi[hard.image_for_recipe[i]], ctx));
    itm = itm_loss(pos, neg);
  }
  const Tensor total = total_loss(itc.loss, sem, itm, cfg_.train.weights);
  out.itc = itc.loss.item();
  out.semantic = sem.defined() ? sem.item() : 0.0;
  out.itm = itm.defined() ? itm.item() : 0.0;
  out.total = total.item();
  if (!std::isfinite(out.total)) {
    std::ostringstream msg;
    msg << "non-finite loss at epoch " << epoch << " step " << step << ": itc=" << out.itc
        << " sem=" << out.semantic << " itm=" << out.itm << " margin=" << out.margin
        << " delta_r=" << out.itc_stats.delta_r << " delta_v=" << out.itc_stats.delta_v << " param_hash="
        << parameter_fingerprint(model_->parameters());
    throw NumericError(msg.str());
  }
  total.backward();
  optimizer_->step();
  return out;
}

EpochRecord Trainer::run_epoch() {
  if (finished()) throw InputError("training already finished");
  EpochRecord rec;
  rec.epoch = epoch_;
  rec.image_frozen = epoch_ < cfg_.train.freeze_image_epochs;
  set_image_frozen(rec.image_frozen);

  std::vector<std::size_t> order = split_.train;
  std::mt19937_64 shuffle_rng = stream(cfg_.train.seed, epoch_, 0, 2);
  std::shuffle(order.begin(), order.end(), shuffle_rng);
  const std::size_t bs = cfg_.train.batch_size;
  for (std::size_t start = 0, step = 0; start < order.size(); start += bs, ++step) {
    const std::size_t n = std::min(bs, order.size() - start);
    if (n < 2) break;
    rec.steps.push_back(train_step(std::span(order).subspan(start, n), epoch_, step));
  }
  const double steps = static_cast<double>(rec.steps.size());
  for (const StepRecord& s : rec.steps) {
    rec.mean_total += s.total / steps;
    rec.mean_itc += s.itc / steps;
    rec.mean_semantic += s.semantic / steps;
    rec.mean_itm += s.itm / steps;
    rec.delta_r += s.itc_stats.delta_r;
    rec.delta_v += s.itc_stats.delta_v;
  }
  if (!rec.steps.empty()) rec.margin = rec.steps.front().margin;
  rec.semantic_margin = cfg_.train.semantic_follows_schedule ? rec.margin : cfg_.train.semantic_margin;
  set_image_frozen(false);

  if (split_.val.size() >= 2) {
    EvalConfig vc;
    vc.bag_size = split_.val.size();
    vc.num_bags = 1;
    vc.seed = cfg_.eval.seed;
    const EvalReport report = evaluate_rows(*model_, *corpus_, vocab_, split_.val, vc);
    rec.validated = true;
    rec.val_image_to_recipe = report.at(Direction::image_to_recipe).mean;
    rec.val_recipe_to_image = report.at(Direction::recipe_to_image).mean;
    if (better(rec.val_image_to_recipe, selection_)) {
      rec.improved = true;
      selection_ = {true, epoch_, rec.val_image_to_recipe.medr, rec.val_image_to_recipe.r1};
      best_params_ = snapshot_parameters(model_->parameters());
    }
  }
  rec.image_fingerprint = parameter_fingerprint(model_->image_parameters());
  ++epoch_;
  return rec;
}

std::vector<EpochRecord> Trainer::run(const std::function<void(const EpochRecord&)>& on_epoch) {
  std::vector<EpochRecord> out;
  while (!finished()) {
    out.push_back(run_epoch());
    if (on_epoch) on_epoch(out.back());
  }
  return out;
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint c;
  c.epoch = epoch_;
  c.config = to_config_text(cfg_);
  c.vocabulary = vocab_.words();
  c.params = snapshot_parameters(optimizer_->params());
  const auto& slots = optimizer_->slots();
  for (std::size_t i = 0; i < c.params.size(); ++i) {
    c.params[i].adam_m = slots[i].m;
    c.params[i].adam_v = slots[i].v;
    c.params[i].adam_step = slots[i].step;
  }
  c.selection = selection_;
  c.best_params = best_params_;
  return c;
}

CrossModalModel Trainer::best_model() const {
  CrossModalModel m(cfg_.model, vocab_.size());
  if (best_params_.empty()) {
    restore_parameters(m.parameters(), snapshot_parameters(model_->parameters()));
  } else {
    restore_parameters(m.parameters(), best_params_);
  }
  return m;
}

LoadedModel load_model(const Checkpoint& ckpt, bool use_best) {
  LoadedModel out;
  out.config = parse_config(ckpt.config);
  out.config.validate();
  out.vocabulary = Vocabulary::from_words(ckpt.vocabulary);
  out.model = std::make_unique<CrossModalModel>(out.config.model, out.vocabulary.size());
  restore_parameters(out.model->parameters(),
                     use_best && !ckpt.best_params.empty() ? ckpt.best_params : ckpt.params);
  return out;
}

EvalReport evaluate_rows(const CrossModalModel& model, const Corpus& corpus, const Vocabulary& vocab,
                         std::span<const std::size_t> rows, const EvalConfig& cfg) {
  const EmbeddingPair emb = encode_embeddings(model, corpus, vocab, rows);
  if (!cfg.rerank_top_k) return evaluate(emb.recipe, emb.image, cfg, nullptr);
  const MatchScorer scorer(model, corpus, vocab, rows);
  const PairScorer fn = [&scorer](std::size_t r, std::size_t i) { return scorer(r, i); };
  return evaluate(emb.recipe, emb.image, cfg, &fn);
}

}  // namespace xmodal

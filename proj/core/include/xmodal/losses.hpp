// Copyright 2026 The xmodal Authors
// SPDX-License-Identifier: Apache-2.0
//
// Retrieval losses on L2-normalized embeddings. Distance is the cosine
// distance d(x, y) = 1 - x·y. Batch-all triplets; each direction's summed
// hinge is divided by its active-triplet count (max(δ, 1)).

#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "xmodal/tensor.hpp"

namespace xmodal {

enum class MarginKind { fixed, inc, ada };

struct MarginPolicy {
  MarginKind kind = MarginKind::inc;
  double alpha = 0.3;
  double alpha_inc_start = 0.05;
  double alpha_inc_step = 0.005;
  double clamp_min = 0.05;
  double clamp_max = 0.3;
};

// fixed: alpha. inc: clamp(start + epoch·step). ada: clamp(alpha / max(δ, 1)),
// δ counted beforehand at margin alpha.
double margin_at(const MarginPolicy& policy, std::size_t epoch, std::size_t delta);

// [d_ap + margin - d_an]₊
double triplet(double d_ap, double d_an, double margin);

struct TripletBatchStats {
  std::size_t delta_r = 0;  // active triplets with recipe anchors
  std::size_t delta_v = 0;  // active triplets with image anchors

  std::size_t total() const { return delta_r + delta_v; }
};

struct TripletLossResult {
  Tensor loss;  // scalar
  TripletBatchStats stats;
};

// Row i of recipe and image embeddings form a pair. For a recipe anchor i the
// positive is image i and every image j != i is a negative; symmetric for
// image anchors. The hinge's subgradient is 0 where l == 0. B < 2 throws.
TripletLossResult itc_loss(const Tensor& recipe_embeddings, const Tensor& image_embeddings, double margin);

// Same structure over labelled rows only: positives share the anchor's class,
// negatives do not. Unlabelled rows take no part.
TripletLossResult semantic_loss(const Tensor& recipe_embeddings, const Tensor& image_embeddings,
                                std::span<const std::optional<std::int32_t>> classes, double margin);

// Active-triplet counts of itc_loss at `margin`, without building a graph.
TripletBatchStats count_active_triplets(const Tensor& recipe_embeddings, const Tensor& image_embeddings,
                                        double margin);

struct LossWeights {
  double semantic = 0.1;
  double itm = 1.0;
};

double total_loss(double itc, double semantic, double itm, const LossWeights& w = {});
// Terms whose weight is zero, or which are undefined, are left out of the graph.
Tensor total_loss(const Tensor& itc, const Tensor& semantic, const Tensor& itm, const LossWeights& w = {});

}  // namespace xmodal

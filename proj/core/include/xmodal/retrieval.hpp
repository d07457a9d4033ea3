// Copyright 2026 The xmodal Authors
// SPDX-License-Identifier: Apache-2.0
//
// Cross-modal retrieval metrics over random bags of aligned pairs.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xmodal/tensor.hpp"

namespace xmodal {

enum class Direction { image_to_recipe, recipe_to_image };
const char* direction_name(Direction d);

struct EvalConfig {
  std::size_t bag_size = 100;
  std::size_t num_bags = 10;
  std::vector<Direction> directions{Direction::image_to_recipe, Direction::recipe_to_image};
  std::optional<std::size_t> rerank_top_k;
  std::uint64_t seed = 0;
};

struct Metrics {
  double medr = 0.0;
  double r1 = 0.0, r5 = 0.0, r10 = 0.0;  // percentages
};

struct DirectionReport {
  Direction direction = Direction::image_to_recipe;
  Metrics mean;
  std::vector<Metrics> per_bag;
};

struct EvalReport {
  std::vector<DirectionReport> directions;

  const DirectionReport& at(Direction d) const;
};

// Match probability for (recipe row, image row), both indexing the full
// embedding matrices handed to evaluate().
using PairScorer = std::function<double(std::size_t recipe_row, std::size_t image_row)>;

// rank[i] is the 1-based position of candidate i when candidates are sorted by
// descending dot product with query i, ties going to the lower index.
std::vector<std::size_t> rank_matrix(const Tensor& queries, const Tensor& candidates);
// Same rule over a precomputed [N×N] similarity matrix.
std::vector<std::size_t> ranks_from_similarity(std::span<const double> similarity, std::size_t n);

// Median of the ranks; the mean of the two middle values for even counts.
double median_rank(std::span<const std::size_t> ranks);
Metrics metrics_from_ranks(std::span<const std::size_t> ranks);

// Stable reorder of the candidates by descending score; equal scores keep
// their incoming (dual-encoder) order.
std::vector<std::size_t> rerank(std::span<const std::size_t> top_k_candidates,
                                const std::function<double(std::size_t candidate)>& score);

// Samples cfg.num_bags bags of cfg.bag_size pairs without replacement inside a
// bag. With rerank_top_k set, the top-k candidates of every query are
// reordered by `scorer` before ranks are read off.
EvalReport evaluate(const Tensor& recipe_embeddings, const Tensor& image_embeddings, const EvalConfig& cfg,
                    const PairScorer* scorer = nullptr);

std::string format_report(const EvalReport& report);
// JSON lines: one record per bag and direction, then one summary record per direction.
std::string report_jsonl(const EvalReport& report);

}  // namespace xmodal

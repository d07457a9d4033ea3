// Copyright 2026 The xmodal Authors
// SPDX-License-Identifier: Apache-2.0

#include "xmodal/retrieval.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "xmodal/parallel.hpp"

namespace xmodal {

const char* direction_name(Direction d) {
  return d == Direction::image_to_recipe ? "image_to_recipe" : "recipe_to_image";
}

const DirectionReport& EvalReport::at(Direction d) const {
  for (const DirectionReport& r : directions) {
    if (r.direction == d) return r;
  }
  throw InputError(std::string("eval report has no ") + direction_name(d) + " section");
}

std::vector<std::size_t> ranks_from_similarity(std::span<const double> similarity, std::size_t n) {
  if (similarity.size() != n * n) throw DimensionError("ranks_from_similarity: matrix is not N×N");
  std::vector<std::size_t> ranks(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = similarity.data() + i * n;
    const double target = row[i];
    std::size_t ahead = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (row[j] > target || (row[j] == target && j < i)) ++ahead;
    }
    ranks[i] = ahead + 1;
  }
  return ranks;
}

namespace {

std::vector<double> similarity_matrix(const Tensor& queries, const Tensor& candidates,
                                      std::span<const std::size_t> rows) {
  const std::size_t n = rows.size(), d = queries.cols();
  const auto q = queries.data();
  const auto c = candidates.data();
  std::vector<double> sim(n * n);
  parallel_for(n, [&](std::size_t i) {
    const double* qi = q.data() + rows[i] * d;
    for (std::size_t j = 0; j < n; ++j) {
      const double* cj = c.data() + rows[j] * d;
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += qi[k] * cj[k];
      sim[i * n + j] = s;
    }
  });
  return sim;
}

}  // namespace

std::vector<std::size_t> rank_matrix(const Tensor& queries, const Tensor& candidates) {
  if (queries.dim() != 2 || queries.shape() != candidates.shape()) {
    throw DimensionError("rank_matrix: queries " + shape_str(queries.shape()) + " vs candidates " +
                         shape_str(candidates.shape()));
  }
  std::vector<std::size_t> rows(queries.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return ranks_from_similarity(similarity_matrix(queries, candidates, rows), rows.size());
}

double median_rank(std::span<const std::size_t> ranks) {
  if (ranks.empty()) throw InputError("median_rank: no ranks");
  std::vector<std::size_t> sorted(ranks.begin(), ranks.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  if (n % 2 == 1) return static_cast<double>(sorted[n / 2]);
  return 0.5 * static_cast<double>(sorted[n / 2 - 1] + sorted[n / 2]);
}

Metrics metrics_from_ranks(std::span<const std::size_t> ranks) {
  Metrics m;
  m.medr = median_rank(ranks);
  const double n = static_cast<double>(ranks.size());
  auto recall = [&](std::size_t k) {
    return 100.0 * static_cast<double>(std::count_if(ranks.begin(), ranks.end(), [k](std::size_t r) { return r <= k; })) / n;
  };
  m.r1 = recall(1);
  m.r5 = recall(5);
  m.r10 = recall(10);
  return m;
}

std::vector<std::size_t> rerank(std::span<const std::size_t> top_k_candidates,
                                const std::function<double(std::size_t candidate)>& score) {
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(top_k_candidates.size());
  for (std::size_t c : top_k_candidates) scored.emplace_back(score(c), c);
  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<std::size_t> out;
  out.reserve(scored.size());
  for (const auto& [s, c] : scored) out.push_back(c);
  return out;
}

EvalReport evaluate(const Tensor& recipe_embeddings, const Tensor& image_embeddings, const EvalConfig& cfg,
                    const PairScorer* scorer) {
  if (recipe_embeddings.dim() != 2 || recipe_embeddings.shape() != image_embeddings.shape()) {
    throw DimensionError("evaluate: recipe " + shape_str(recipe_embeddings.shape()) + " vs image " +
                         shape_str(image_embeddings.shape()));
  }
  const std::size_t n = recipe_embeddings.rows();
  if (cfg.bag_size == 0 || cfg.num_bags == 0) throw InputError("evaluate: bag_size and num_bags must be positive");
  if (n < cfg.bag_size) {
    throw InputError("evaluate: corpus of " + std::to_string(n) + " pairs is smaller than bag size " +
                     std::to_string(cfg.bag_size));
  }
  if (cfg.rerank_top_k) {
    if (*cfg.rerank_top_k == 0 || *cfg.rerank_top_k > cfg.bag_size) {
      throw InputError("evaluate: rerank_top_k " + std::to_string(*cfg.rerank_top_k) + " exceeds bag size " +
                       std::to_string(cfg.bag_size));
    }
    if (!scorer) throw InputError("evaluate: re-ranking requested without a scorer");
  }

  EvalReport report;
  for (Direction d : cfg.directions) report.directions.push_back({d, {}, {}});

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> pool(n);
  for (std::size_t bag = 0; bag < cfg.num_bags; ++bag) {
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < cfg.bag_size; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n - 1);
      std::swap(pool[i], pool[pick(rng)]);
    }
    const std::span<const std::size_t> rows(pool.data(), cfg.bag_size);

    for (DirectionReport& dr : report.directions) {
      const bool i2r = dr.direction == Direction::image_to_recipe;
      const Tensor& queries = i2r ? image_embeddings : recipe_embeddings;
      const Tensor& candidates = i2r ? recipe_embeddings : image_embeddings;
      const std::vector<double> sim = similarity_matrix(queries, candidates, rows);
      std::vector<std::size_t> ranks = ranks_from_similarity(sim, cfg.bag_size);

      if (cfg.rerank_top_k) {
        const std::size_t k = *cfg.rerank_top_k;
        for (std::size_t q = 0; q < cfg.bag_size; ++q) {
          if (ranks[q] > k) continue;  // ground truth outside the window keeps its rank
          std::vector<std::size_t> order(cfg.bag_size);
          std::iota(order.begin(), order.end(), std::size_t{0});
          const double* row = sim.data() + q * cfg.bag_size;
          std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                            [row](std::size_t a, std::size_t b) { return row[a] > row[b] || (row[a] == row[b] && a < b); });
          order.resize(k);
          const std::vector<std::size_t> reordered = rerank(order, [&](std::size_t c) {
            return i2r ? (*scorer)(rows[c], rows[q]) : (*scorer)(rows[q], rows[c]);
          });
          ranks[q] = static_cast<std::size_t>(std::find(reordered.begin(), reordered.end(), q) - reordered.begin()) + 1;
        }
      }
      dr.per_bag.push_back(metrics_from_ranks(ranks));
    }
  }

  for (DirectionReport& dr : report.directions) {
    const double bags = static_cast<double>(dr.per_bag.size());
    for (const Metrics& m : dr.per_bag) {
      dr.mean.medr += m.medr / bags;
      dr.mean.r1 += m.r1 / bags;
      dr.mean.r5 += m.r5 / bags;
      dr.mean.r10 += m.r10 / bags;
    }
  }
  return report;
}

std::string format_report(const EvalReport& report) {
  std::ostringstream out;
  char line[160];
  for (const DirectionReport& dr : report.directions) {
    std::snprintf(line, sizeof line, "%-16s medR %6.2f  R@1 %6.2f  R@5 %6.2f  R@10 %6.2f  (%zu bags)\n",
                  direction_name(dr.direction), dr.mean.medr, dr.mean.r1, dr.mean.r5, dr.mean.r10, dr.per_bag.size());
    out << line;
  }
  return out.str();
}

std::string report_jsonl(const EvalReport& report) {
  std::ostringstream out;
  auto record = [](const Metrics& m) {
    return nlohmann::json{{"medR", m.medr}, {"R@1", m.r1}, {"R@5", m.r5}, {"R@10", m.r10}};
  };
  for (const DirectionReport& dr : report.directions) {
    for (std::size_t b = 0; b < dr.per_bag.size(); ++b) {
      nlohmann::json j = record(dr.per_bag[b]);
      j["type"] = "bag";
      j["direction"] = direction_name(dr.direction);
      j["bag"] = b;
      out << j.dump() << '\n';
    }
  }
  for (const DirectionReport& dr : report.directions) {
    nlohmann::json j = record(dr.mean);
    j["type"] = "summary";
    j["direction"] = direction_name(dr.direction);
    j["bags"] = dr.per_bag.size();
    out << j.dump() << '\n';
  }
  return out.str();
}

}  // namespace xmodal

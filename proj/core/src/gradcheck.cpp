// Copyright 2026 The xmodal Authors
// SPDX-License-Identifier: Apache-2.0

#include "xmodal/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace xmodal {

GradCheckResult check_gradients(const std::function<Tensor()>& f, std::vector<Tensor> inputs,
                                const GradCheckOptions& options) {
  for (Tensor& t : inputs) t.zero_grad();
  const Tensor out = f();
  if (out.numel() != 1) throw DimensionError("check_gradients: f must return a scalar");
  out.backward();

  std::mt19937_64 rng(options.seed);
  GradCheckResult result;
  for (Tensor& input : inputs) {
    std::vector<double> analytic(input.numel(), 0.0);
    if (input.has_grad()) std::copy(input.grad().begin(), input.grad().end(), analytic.begin());

    std::vector<std::size_t> indices(input.numel());
    std::iota(indices.begin(), indices.end(), std::size_t{0});
    if (options.max_elements_per_input && indices.size() > options.max_elements_per_input) {
      std::shuffle(indices.begin(), indices.end(), rng);
      indices.resize(options.max_elements_per_input);
    }

    auto values = input.mutable_data();
    NoGradGuard no_grad;
    for (std::size_t idx : indices) {
      const double original = values[idx];
      values[idx] = original + options.eps;
      const double plus = f().item();
      values[idx] = original - options.eps;
      const double minus = f().item();
      values[idx] = original;
      const double numeric = (plus - minus) / (2.0 * options.eps);
      const double denom = std::max({std::abs(analytic[idx]), std::abs(numeric), options.floor});
      result.max_relative_error = std::max(result.max_relative_error, std::abs(analytic[idx] - numeric) / denom);
      ++result.elements_checked;
    }
  }
  return result;
}

}  // namespace xmodal

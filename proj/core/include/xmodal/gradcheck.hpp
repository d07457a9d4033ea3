// Copyright 2026 The xmodal Authors
// SPDX-License-Identifier: Apache-2.0
//
// Central finite-difference oracle for the gradient tape.

#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "xmodal/tensor.hpp"

namespace xmodal {

struct GradCheckOptions {
  double eps = 1e-5;
  // Elements probed per input; 0 probes every element.
  std::size_t max_elements_per_input = 0;
  std::uint64_t seed = 0;
  // Denominator floor: |analytic - numeric| / max(|analytic|, |numeric|, floor).
  double floor = 1e-6;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t elements_checked = 0;
};

// `f` must rebuild its graph from `inputs` on every call and return a scalar.
GradCheckResult check_gradients(const std::function<Tensor()>& f, std::vector<Tensor> inputs,
                                const GradCheckOptions& options = {});

}  // namespace xmodal

// Copyright 2026 The xmodal Authors
// SPDX-License-Identifier: Apache-2.0

#include "xmodal/optimizer.hpp"

#include <cmath>

namespace xmodal {

Adam::Adam(ParamList params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
  slots_.reserve(params_.size());
  for (const NamedTensor& p : params_) {
    slots_.push_back({std::vector<double>(p.tensor.numel(), 0.0), std::vector<double>(p.tensor.numel(), 0.0), 0});
  }
}

void Adam::step() {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i].tensor;
    if (!p.requires_grad() || !p.has_grad()) continue;
    Slot& s = slots_[i];
    ++s.step;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(s.step));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(s.step));
    const auto g = p.grad();
    auto w = p.mutable_data();
    for (std::size_t k = 0; k < w.size(); ++k) {
      s.m[k] = cfg_.beta1 * s.m[k] + (1.0 - cfg_.beta1) * g[k];
      s.v[k] = cfg_.beta2 * s.v[k] + (1.0 - cfg_.beta2) * g[k] * g[k];
      w[k] -= cfg_.learning_rate * (s.m[k] / c1) / (std::sqrt(s.v[k] / c2) + cfg_.eps);
    }
  }
  zero_grad();
}

void Adam::zero_grad() {
  for (NamedTensor& p : params_) p.tensor.node()->grad.clear();
}

}  // namespace xmodal

// Copyright 2026 The xmodal Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "xmodal/nn.hpp"

namespace xmodal {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adaptive moment estimation with bias correction. Each parameter keeps its
// own step count, so parameters frozen for a while start their correction
// from scratch when released.
class Adam {
 public:
  struct Slot {
    std::vector<double> m, v;
    std::uint64_t step = 0;
  };

  Adam(ParamList params, AdamConfig cfg);

  // Updates every parameter that requires grad and has one, then releases all
  // gradients, so a parameter the next graph does not reach is left alone.
  void step();
  void zero_grad();

  const ParamList& params() const { return params_; }
  std::vector<Slot>& slots() { return slots_; }
  const std::vector<Slot>& slots() const { return slots_; }
  AdamConfig& config() { return cfg_; }

 private:
  ParamList params_;
  AdamConfig cfg_;
  std::vector<Slot> slots_;
};

}  // namespace xmodal

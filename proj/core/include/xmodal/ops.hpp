// Copyright 2026 The xmodal Authors
// SPDX-License-Identifier: Apache-2.0
//
// Differentiable primitives. Shapes are checked eagerly and mismatches raise
// DimensionError naming both operands.

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "xmodal/tensor.hpp"

namespace xmodal {

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& x);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
// x[m×n] + bias[n] on every row.
Tensor add_bias(const Tensor& x, const Tensor& bias);
Tensor scale(const Tensor& x, double factor);

// 2-D concatenation; axis 0 stacks rows, axis 1 stacks columns.
Tensor concat(std::span<const Tensor> parts, std::size_t axis);
Tensor slice(const Tensor& x, std::size_t axis, std::size_t start, std::size_t count);
Tensor reshape(const Tensor& x, Shape shape);

// Keeps the reduced axis: axis 0 gives [1×n], axis 1 gives [m×1].
Tensor mean_along_axis(const Tensor& x, std::size_t axis);
Tensor sum(const Tensor& x);

Tensor relu(const Tensor& x);
// Exact (erf-based) GELU.
Tensor gelu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
// Natural log; non-positive inputs raise NumericError.
Tensor log(const Tensor& x);

// Row-max stabilized. NaN input raises NumericError.
Tensor softmax_rows(const Tensor& x);
// Normalizes over the last axis.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);
// Zero rows map to zero rows.
Tensor l2_normalize_rows(const Tensor& x);

// Gathers rows of table[V×d]; ids out of range raise InputError.
Tensor embedding_lookup(const Tensor& table, std::span<const std::int32_t> ids);

// Inverted dropout. rate == 0 is the identity.
Tensor dropout(const Tensor& x, double rate, std::mt19937_64& rng);

}  // namespace xmodal

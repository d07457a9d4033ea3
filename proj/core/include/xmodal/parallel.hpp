// Copyright 2026 The xmodal Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

namespace xmodal {

// Worker count for read-only fan-out (evaluation, embedding export). Read from
// XMODAL_THREADS; defaults to 1.
std::size_t worker_threads();

// Runs body(i) for i in [0, n) across worker_threads() threads. Work items
// must not write shared state.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace xmodal

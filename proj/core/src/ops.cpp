// Copyright 2026 The xmodal Authors
// SPDX-License-Identifier: Apache-2.0

#include "xmodal/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace xmodal {

using detail::Node;

namespace {

bool wants(const Node& n) { return n.requires_grad; }

void require_2d(const Tensor& x, const char* op) {
  if (x.dim() != 2) throw DimensionError(std::string(op) + ": expected 2-D tensor, got " + shape_str(x.shape()));
}

void require_same(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
}

// c[m×n] += a[m×k] · b[k×n]
void gemm_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    const double* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

std::vector<double> transposed(const double* x, std::size_t m, std::size_t n) {
  std::vector<double> t(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) t[j * m + i] = x[i * n + j];
  return t;
}

template <typename F, typename G>
Tensor unary(const char* op, const Tensor& x, F forward, G derivative) {
  std::vector<double> out(x.numel());
  const auto in = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = forward(in[i]);
  return make_op_result(op, x.shape(), std::move(out), {x}, [derivative](Node& self) {
    Node& p = *self.parents[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += self.grad[i] * derivative(p.data[i], self.data[i]);
  });
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_2d(a, "matmul");
  require_2d(b, "matmul");
  const std::size_t m = a.size(0), k = a.size(1), n = b.size(1);
  if (b.size(0) != k) {
    throw DimensionError("matmul: inner dimensions differ, " + shape_str(a.shape()) + " · " + shape_str(b.shape()));
  }
  std::vector<double> out(m * n, 0.0);
  gemm_acc(a.data().data(), b.data().data(), out.data(), m, k, n);
  return make_op_result("matmul", {m, n}, std::move(out), {a, b}, [m, k, n](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    if (wants(pa)) {
      // dA = dC · Bᵀ
      const std::vector<double> bt = transposed(pb.data.data(), k, n);
      gemm_acc(self.grad.data(), bt.data(), pa.grad.data(), m, n, k);
    }
    if (wants(pb)) {
      // dB = Aᵀ · dC
      const std::vector<double> at = transposed(pa.data.data(), m, k);
      gemm_acc(at.data(), self.grad.data(), pb.grad.data(), k, m, n);
    }
  });
}

Tensor transpose(const Tensor& x) {
  require_2d(x, "transpose");
  const std::size_t m = x.size(0), n = x.size(1);
  return make_op_result("transpose", {n, m}, transposed(x.data().data(), m, n), {x}, [m, n](Node& self) {
    Node& p = *self.parents[0];
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) p.grad[i * n + j] += self.grad[j * m + i];
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same(a, b, "add");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  return make_op_result("add", a.shape(), std::move(out), {a, b}, [](Node& self) {
    for (auto& parent : self.parents) {
      if (!wants(*parent)) continue;
      for (std::size_t i = 0; i < self.grad.size(); ++i) parent->grad[i] += self.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same(a, b, "sub");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
  return make_op_result("sub", a.shape(), std::move(out), {a, b}, [](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    if (wants(pa))
      for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i];
    if (wants(pb))
      for (std::size_t i = 0; i < self.grad.size(); ++i) pb.grad[i] -= self.grad[i];
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same(a, b, "mul");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  return make_op_result("mul", a.shape(), std::move(out), {a, b}, [](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    if (wants(pa))
      for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i] * pb.data[i];
    if (wants(pb))
      for (std::size_t i = 0; i < self.grad.size(); ++i) pb.grad[i] += self.grad[i] * pa.data[i];
  });
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  require_2d(x, "add_bias");
  const std::size_t m = x.size(0), n = x.size(1);
  if (bias.numel() != n) {
    throw DimensionError("add_bias: bias " + shape_str(bias.shape()) + " does not fit " + shape_str(x.shape()));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  const auto b = bias.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += b[j];
  return make_op_result("add_bias", x.shape(), std::move(out), {x, bias}, [m, n](Node& self) {
    Node& px = *self.parents[0];
    Node& pb = *self.parents[1];
    if (wants(px))
      for (std::size_t i = 0; i < self.grad.size(); ++i) px.grad[i] += self.grad[i];
    if (wants(pb))
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) pb.grad[j] += self.grad[i * n + j];
  });
}

Tensor scale(const Tensor& x, double factor) {
  std::vector<double> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.data()[i] * factor;
  return make_op_result("scale", x.shape(), std::move(out), {x}, [factor](Node& self) {
    Node& p = *self.parents[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += self.grad[i] * factor;
  });
}

Tensor concat(std::span<const Tensor> parts, std::size_t axis) {
  if (parts.empty()) throw DimensionError("concat: no inputs");
  if (axis > 1) throw DimensionError("concat: axis must be 0 or 1");
  for (const Tensor& t : parts) require_2d(t, "concat");
  const std::size_t other = 1 - axis;
  const std::size_t fixed = parts[0].size(other);
  std::size_t total = 0;
  for (const Tensor& t : parts) {
    if (t.size(other) != fixed) {
      throw DimensionError("concat: " + shape_str(parts[0].shape()) + " and " + shape_str(t.shape()) +
                           " disagree off the concat axis");
    }
    total += t.size(axis);
  }
  const std::size_t m = axis == 0 ? total : fixed;
  const std::size_t n = axis == 0 ? fixed : total;
  std::vector<double> out(m * n);
  std::vector<std::size_t> offsets;
  offsets.reserve(parts.size());
  std::size_t offset = 0;
  for (const Tensor& t : parts) {
    offsets.push_back(offset);
    const auto src = t.data();
    if (axis == 0) {
      std::copy(src.begin(), src.end(), out.begin() + static_cast<std::ptrdiff_t>(offset * n));
    } else {
      const std::size_t w = t.size(1);
      for (std::size_t i = 0; i < m; ++i)
        std::copy_n(src.data() + i * w, w, out.data() + i * n + offset);
    }
    offset += t.size(axis);
  }
  std::vector<Tensor> parents(parts.begin(), parts.end());
  return make_op_result("concat", {m, n}, std::move(out), std::move(parents),
                        [axis, m, n, offsets](Node& self) {
                          for (std::size_t k = 0; k < self.parents.size(); ++k) {
                            Node& p = *self.parents[k];
                            if (!wants(p)) continue;
                            if (axis == 0) {
                              const double* g = self.grad.data() + offsets[k] * n;
                              for (std::size_t i = 0; i < p.grad.size(); ++i) p.grad[i] += g[i];
                            } else {
                              const std::size_t w = p.shape[1];
                              for (std::size_t i = 0; i < m; ++i)
                                for (std::size_t j = 0; j < w; ++j)
                                  p.grad[i * w + j] += self.grad[i * n + offsets[k] + j];
                            }
                          }
                        });
}

Tensor slice(const Tensor& x, std::size_t axis, std::size_t start, std::size_t count) {
  require_2d(x, "slice");
  if (axis > 1) throw DimensionError("slice: axis must be 0 or 1");
  if (count == 0 || start + count > x.size(axis)) {
    throw DimensionError("slice: range [" + std::to_string(start) + ", " + std::to_string(start + count) +
                         ") outside " + shape_str(x.shape()));
  }
  const std::size_t m = x.size(0), n = x.size(1);
  const std::size_t om = axis == 0 ? count : m;
  const std::size_t on = axis == 0 ? n : count;
  std::vector<double> out(om * on);
  const auto src = x.data();
  for (std::size_t i = 0; i < om; ++i) {
    const std::size_t si = axis == 0 ? start + i : i;
    const std::size_t sj = axis == 0 ? 0 : start;
    std::copy_n(src.data() + si * n + sj, on, out.data() + i * on);
  }
  return make_op_result("slice", {om, on}, std::move(out), {x}, [axis, start, n, om, on](Node& self) {
    Node& p = *self.parents[0];
    for (std::size_t i = 0; i < om; ++i) {
      const std::size_t si = axis == 0 ? start + i : i;
      const std::size_t sj = axis == 0 ? 0 : start;
      for (std::size_t j = 0; j < on; ++j) p.grad[si * n + sj + j] += self.grad[i * on + j];
    }
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw DimensionError("reshape: " + shape_str(x.shape()) + " cannot become " + shape_str(shape));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  return make_op_result("reshape", std::move(shape), std::move(out), {x}, [](Node& self) {
    Node& p = *self.parents[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += self.grad[i];
  });
}

Tensor mean_along_axis(const Tensor& x, std::size_t axis) {
  require_2d(x, "mean_along_axis");
  if (axis > 1) throw DimensionError("mean_along_axis: axis must be 0 or 1");
  const std::size_t m = x.size(0), n = x.size(1);
  const auto src = x.data();
  if (axis == 0) {
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) out[j] += src[i * n + j];
    for (double& v : out) v /= static_cast<double>(m);
    return make_op_result("mean_rows", {1, n}, std::move(out), {x}, [m, n](Node& self) {
      Node& p = *self.parents[0];
      const double inv = 1.0 / static_cast<double>(m);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) p.grad[i * n + j] += self.grad[j] * inv;
    });
  }
  std::vector<double> out(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i] += src[i * n + j];
    out[i] /= static_cast<double>(n);
  }
  return make_op_result("mean_cols", {m, 1}, std::move(out), {x}, [m, n](Node& self) {
    Node& p = *self.parents[0];
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) p.grad[i * n + j] += self.grad[i] * inv;
  });
}

Tensor sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.data()) total += v;
  return make_op_result("sum", {1}, {total}, {x}, [](Node& self) {
    Node& p = *self.parents[0];
    for (double& g : p.grad) g += self.grad[0];
  });
}

Tensor relu(const Tensor& x) {
  return unary(
      "relu", x, [](double v) { return v > 0.0 ? v : 0.0; }, [](double in, double) { return in > 0.0 ? 1.0 : 0.0; });
}

Tensor gelu(const Tensor& x) {
  constexpr double inv_sqrt2 = 0.70710678118654752440;
  constexpr double inv_sqrt_2pi = 0.39894228040143267794;
  return unary(
      "gelu", x, [](double v) { return 0.5 * v * (1.0 + std::erf(v * inv_sqrt2)); },
      [](double in, double) {
        const double cdf = 0.5 * (1.0 + std::erf(in * inv_sqrt2));
        const double pdf = inv_sqrt_2pi * std::exp(-0.5 * in * in);
        return cdf + in * pdf;
      });
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      "sigmoid", x,
      [](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double out) { return out * (1.0 - out); });
}

Tensor log(const Tensor& x) {
  for (double v : x.data()) {
    if (!(v > 0.0)) throw NumericError("log: non-positive input " + std::to_string(v));
  }
  return unary(
      "log", x, [](double v) { return std::log(v); }, [](double in, double) { return 1.0 / in; });
}

Tensor softmax_rows(const Tensor& x) {
  require_2d(x, "softmax_rows");
  const std::size_t m = x.size(0), n = x.size(1);
  const auto src = x.data();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = src.data() + i * n;
    double mx = row[0];
    for (std::size_t j = 0; j < n; ++j) {
      if (std::isnan(row[j])) throw NumericError("softmax_rows: NaN input in row " + std::to_string(i));
      mx = std::max(mx, row[j]);
    }
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      out[i * n + j] = std::exp(row[j] - mx);
      total += out[i * n + j];
    }
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] /= total;
  }
  return make_op_result("softmax_rows", x.shape(), std::move(out), {x}, [m, n](Node& self) {
    Node& p = *self.parents[0];
    for (std::size_t i = 0; i < m; ++i) {
      const double* y = self.data.data() + i * n;
      const double* g = self.grad.data() + i * n;
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += y[j] * g[j];
      for (std::size_t j = 0; j < n; ++j) p.grad[i * n + j] += y[j] * (g[j] - dot);
    }
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  const std::size_t d = x.shape().back();
  if (gamma.numel() != d || beta.numel() != d) {
    throw DimensionError("layer_norm: gamma " + shape_str(gamma.shape()) + " / beta " + shape_str(beta.shape()) +
                         " do not fit " + shape_str(x.shape()));
  }
  const std::size_t tokens = x.numel() / d;
  const auto src = x.data();
  const auto g = gamma.data();
  const auto b = beta.data();
  std::vector<double> out(x.numel());
  // Saved per token: normalized values and 1/sigma.
  auto xhat = std::make_shared<std::vector<double>>(x.numel());
  auto inv_std = std::make_shared<std::vector<double>>(tokens);
  for (std::size_t t = 0; t < tokens; ++t) {
    const double* row = src.data() + t * d;
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += row[j];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= static_cast<double>(d);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[t] = is;
    for (std::size_t j = 0; j < d; ++j) {
      const double h = (row[j] - mean) * is;
      (*xhat)[t * d + j] = h;
      out[t * d + j] = h * g[j] + b[j];
    }
  }
  return make_op_result("layer_norm", x.shape(), std::move(out), {x, gamma, beta},
                        [d, tokens, xhat, inv_std](Node& self) {
                          Node& px = *self.parents[0];
                          Node& pg = *self.parents[1];
                          Node& pb = *self.parents[2];
                          const double inv_d = 1.0 / static_cast<double>(d);
                          for (std::size_t t = 0; t < tokens; ++t) {
                            const double* gy = self.grad.data() + t * d;
                            const double* h = xhat->data() + t * d;
                            if (wants(pg))
                              for (std::size_t j = 0; j < d; ++j) pg.grad[j] += gy[j] * h[j];
                            if (wants(pb))
                              for (std::size_t j = 0; j < d; ++j) pb.grad[j] += gy[j];
                            if (!wants(px)) continue;
                            double mean_gh = 0.0, mean_ghh = 0.0;
                            for (std::size_t j = 0; j < d; ++j) {
                              const double gh = gy[j] * pg.data[j];
                              mean_gh += gh;
                              mean_ghh += gh * h[j];
                            }
                            mean_gh *= inv_d;
                            mean_ghh *= inv_d;
                            const double is = (*inv_std)[t];
                            for (std::size_t j = 0; j < d; ++j) {
                              const double gh = gy[j] * pg.data[j];
                              px.grad[t * d + j] += is * (gh - mean_gh - h[j] * mean_ghh);
                            }
                          }
                        });
}

Tensor l2_normalize_rows(const Tensor& x) {
  require_2d(x, "l2_normalize_rows");
  const std::size_t m = x.size(0), n = x.size(1);
  const auto src = x.data();
  std::vector<double> out(m * n, 0.0);
  auto norms = std::make_shared<std::vector<double>>(m);
  for (std::size_t i = 0; i < m; ++i) {
    double sq = 0.0;
    for (std::size_t j = 0; j < n; ++j) sq += src[i * n + j] * src[i * n + j];
    const double norm = std::sqrt(sq);
    (*norms)[i] = norm;
    if (norm == 0.0) continue;
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = src[i * n + j] / norm;
  }
  return make_op_result("l2_normalize_rows", x.shape(), std::move(out), {x}, [m, n, norms](Node& self) {
    Node& p = *self.parents[0];
    for (std::size_t i = 0; i < m; ++i) {
      const double norm = (*norms)[i];
      if (norm == 0.0) continue;  // zero row: zero output, zero gradient
      const double* y = self.data.data() + i * n;
      const double* g = self.grad.data() + i * n;
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += y[j] * g[j];
      for (std::size_t j = 0; j < n; ++j) p.grad[i * n + j] += (g[j] - y[j] * dot) / norm;
    }
  });
}

Tensor embedding_lookup(const Tensor& table, std::span<const std::int32_t> ids) {
  require_2d(table, "embedding_lookup");
  if (ids.empty()) throw InputError("embedding_lookup: empty id sequence");
  const std::size_t vocab = table.size(0), d = table.size(1);
  std::vector<double> out(ids.size() * d);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= vocab) {
      throw InputError("embedding_lookup: id " + std::to_string(ids[i]) + " outside vocabulary of " +
                       std::to_string(vocab));
    }
    std::copy_n(table.data().data() + static_cast<std::size_t>(ids[i]) * d, d, out.data() + i * d);
  }
  std::vector<std::int32_t> saved(ids.begin(), ids.end());
  return make_op_result("embedding_lookup", {ids.size(), d}, std::move(out), {table},
                        [saved = std::move(saved), d](Node& self) {
                          Node& p = *self.parents[0];
                          for (std::size_t i = 0; i < saved.size(); ++i) {
                            double* row = p.grad.data() + static_cast<std::size_t>(saved[i]) * d;
                            for (std::size_t j = 0; j < d; ++j) row[j] += self.grad[i * d + j];
                          }
                        });
}

Tensor dropout(const Tensor& x, double rate, std::mt19937_64& rng) {
  if (rate <= 0.0) return x;
  if (rate >= 1.0) throw InputError("dropout: rate must be below 1");
  const double keep_scale = 1.0 / (1.0 - rate);
  std::bernoulli_distribution keep(1.0 - rate);
  auto mask = std::make_shared<std::vector<double>>(x.numel());
  std::vector<double> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    (*mask)[i] = keep(rng) ? keep_scale : 0.0;
    out[i] = x.data()[i] * (*mask)[i];
  }
  return make_op_result("dropout", x.shape(), std::move(out), {x}, [mask](Node& self) {
    Node& p = *self.parents[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += self.grad[i] * (*mask)[i];
  });
}

}  // namespace xmodal

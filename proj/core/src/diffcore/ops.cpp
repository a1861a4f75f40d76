#include "gazenlu/diffcore/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "kernels.hpp"

namespace gazenlu::diffcore {

using detail::Node;

namespace {

[[noreturn]] void shape_fail(const char* op, const Tensor& a, const Tensor& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + a.shape_string() + " and " +
                   b.shape_string());
}

[[noreturn]] void shape_fail(const char* op, const Tensor& a, const std::string& why) {
  throw ShapeError(std::string(op) + ": tensor " + a.shape_string() + " " + why);
}

Node& in(Node& self, std::size_t i) { return *self.parents[i]; }
bool wants(const Node& self, std::size_t i) { return self.parents[i]->requires_grad; }

enum class Broadcast { same, row, scalar };

Broadcast broadcast_kind(const char* op, const Tensor& a, const Tensor& b) {
  if (a.rows() == b.rows() && a.cols() == b.cols()) return Broadcast::same;
  if (b.rows() == 1 && b.cols() == 1) return Broadcast::scalar;
  if (b.rows() == 1 && b.cols() == a.cols()) return Broadcast::row;
  shape_fail(op, a, b);
}

inline std::size_t bidx(Broadcast kind, std::size_t i, std::size_t cols) {
  switch (kind) {
    case Broadcast::same: return i;
    case Broadcast::row: return i % cols;
    case Broadcast::scalar: return 0;
  }
  return 0;
}

template <typename Fwd, typename Da, typename Db>
Tensor binary(const char* op, const Tensor& a, const Tensor& b, Fwd fwd, Da da, Db db) {
  const Broadcast kind = broadcast_kind(op, a, b);
  const std::size_t n = a.size();
  const std::size_t cols = a.cols();
  std::vector<double> out(n);
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < n; ++i) out[i] = fwd(av[i], bv[bidx(kind, i, cols)]);
  return make_result(op, a.rows(), a.cols(), std::move(out), {a, b},
                     [kind, n, cols, da, db](Node& self) {
                       const auto& x = in(self, 0).value;
                       const auto& y = in(self, 1).value;
                       if (wants(self, 0)) {
                         auto g = in(self, 0).grad_buffer();
                         for (std::size_t i = 0; i < n; ++i)
                           g[i] += self.grad[i] * da(x[i], y[bidx(kind, i, cols)]);
                       }
                       if (wants(self, 1)) {
                         auto g = in(self, 1).grad_buffer();
                         for (std::size_t i = 0; i < n; ++i) {
                           const std::size_t j = bidx(kind, i, cols);
                           g[j] += self.grad[i] * db(x[i], y[j]);
                         }
                       }
                     });
}

template <typename Fwd, typename Deriv>
Tensor unary(const char* op, const Tensor& a, Fwd fwd, Deriv deriv) {
  const std::size_t n = a.size();
  std::vector<double> out(n);
  const auto av = a.values();
  for (std::size_t i = 0; i < n; ++i) out[i] = fwd(av[i]);
  return make_result(op, a.rows(), a.cols(), std::move(out), {a}, [n, deriv](Node& self) {
    const auto& x = in(self, 0).value;
    auto g = in(self, 0).grad_buffer();
    for (std::size_t i = 0; i < n; ++i) g[i] += self.grad[i] * deriv(x[i], self.value[i]);
  });
}

enum class MaskKind { none, same, row };

MaskKind mask_kind(const char* op, const Tensor& a, const Tensor& mask) {
  if (!mask.defined()) return MaskKind::none;
  if (mask.rows() == a.rows() && mask.cols() == a.cols()) return MaskKind::same;
  if (mask.rows() == 1 && mask.cols() == a.cols()) return MaskKind::row;
  shape_fail(op, a, mask);
}

// Row-wise (log-)softmax of a + mask into `out`.
void softmax_rows(std::span<const double> a, std::size_t rows, std::size_t cols, MaskKind kind,
                  std::span<const double> mask, std::span<double> out, bool log_space) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = a.data() + r * cols;
    double* y = out.data() + r * cols;
    const double* m = kind == MaskKind::none ? nullptr
                      : kind == MaskKind::row ? mask.data()
                                              : mask.data() + r * cols;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < cols; ++c) {
      y[c] = x[c] + (m ? m[c] : 0.0);
      mx = std::max(mx, y[c]);
    }
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) total += std::exp(y[c] - mx);
    if (log_space) {
      const double lse = mx + std::log(total);
      for (std::size_t c = 0; c < cols; ++c) y[c] -= lse;
    } else {
      for (std::size_t c = 0; c < cols; ++c) y[c] = std::exp(y[c] - mx) / total;
    }
  }
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) shape_fail("matmul", a, b);
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<double> out(m * n, 0.0);
  kernels::gemm_nn(a.values().data(), b.values().data(), out.data(), m, k, n);
  return make_result("matmul", m, n, std::move(out), {a, b}, [m, k, n](Node& self) {
    if (wants(self, 0))
      kernels::gemm_nt(self.grad.data(), in(self, 1).value.data(),
                       in(self, 0).grad_buffer().data(), m, n, k);
    if (wants(self, 1))
      kernels::gemm_tn(in(self, 0).value.data(), self.grad.data(),
                       in(self, 1).grad_buffer().data(), m, k, n);
  });
}

Tensor transpose(const Tensor& a) {
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<double> out(r * c);
  const auto av = a.values();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = av[i * c + j];
  return make_result("transpose", c, r, std::move(out), {a}, [r, c](Node& self) {
    auto g = in(self, 0).grad_buffer();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) g[i * c + j] += self.grad[j * r + i];
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      "add", a, b, [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      "sub", a, b, [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      "mul", a, b, [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; });
}

Tensor scale(const Tensor& a, double factor) {
  return unary(
      "scale", a, [factor](double x) { return x * factor; },
      [factor](double, double) { return factor; });
}

Tensor tanh(const Tensor& a) {
  return unary(
      "tanh", a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      "sigmoid", a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor relu(const Tensor& a) {
  return unary(
      "relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor gelu(const Tensor& a) {
  return unary(
      "gelu", a,
      [](double x) {
        return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + 0.044715 * x * x * x)));
      },
      [](double x, double) {
        const double u = kGeluC * (x + 0.044715 * x * x * x);
        const double t = std::tanh(u);
        const double du = kGeluC * (1.0 + 3.0 * 0.044715 * x * x);
        return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du;
      });
}

Tensor softmax(const Tensor& a, const Tensor& mask) {
  const MaskKind kind = mask_kind("softmax", a, mask);
  const std::size_t rows = a.rows(), cols = a.cols();
  std::vector<double> out(a.size());
  softmax_rows(a.values(), rows, cols, kind, kind == MaskKind::none ? std::span<const double>{}
                                                                     : mask.values(),
               out, false);
  return make_result("softmax", rows, cols, std::move(out), {a}, [rows, cols](Node& self) {
    auto g = in(self, 0).grad_buffer();
    for (std::size_t r = 0; r < rows; ++r) {
      const double* y = self.value.data() + r * cols;
      const double* dy = self.grad.data() + r * cols;
      double dot = 0.0;
      for (std::size_t c = 0; c < cols; ++c) dot += y[c] * dy[c];
      for (std::size_t c = 0; c < cols; ++c) g[r * cols + c] += y[c] * (dy[c] - dot);
    }
  });
}

Tensor log_softmax(const Tensor& a, const Tensor& mask) {
  const MaskKind kind = mask_kind("log_softmax", a, mask);
  const std::size_t rows = a.rows(), cols = a.cols();
  std::vector<double> out(a.size());
  softmax_rows(a.values(), rows, cols, kind, kind == MaskKind::none ? std::span<const double>{}
                                                                     : mask.values(),
               out, true);
  return make_result("log_softmax", rows, cols, std::move(out), {a}, [rows, cols](Node& self) {
    auto g = in(self, 0).grad_buffer();
    for (std::size_t r = 0; r < rows; ++r) {
      const double* y = self.value.data() + r * cols;
      const double* dy = self.grad.data() + r * cols;
      double total = 0.0;
      for (std::size_t c = 0; c < cols; ++c) total += dy[c];
      for (std::size_t c = 0; c < cols; ++c) g[r * cols + c] += dy[c] - std::exp(y[c]) * total;
    }
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  const std::size_t rows = x.rows(), cols = x.cols();
  if (gamma.rows() != 1 || gamma.cols() != cols) shape_fail("layer_norm", x, gamma);
  if (beta.rows() != 1 || beta.cols() != cols) shape_fail("layer_norm", x, beta);
  std::vector<double> out(x.size());
  std::vector<double> xhat(x.size());
  std::vector<double> inv_std(rows);
  const auto xv = x.values();
  const auto gv = gamma.values();
  const auto bv = beta.values();
  for (std::size_t r = 0; r < rows; ++r) {
    double mu = 0.0;
    for (std::size_t c = 0; c < cols; ++c) mu += xv[r * cols + c];
    mu /= static_cast<double>(cols);
    double var = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      const double d = xv[r * cols + c] - mu;
      var += d * d;
    }
    var /= static_cast<double>(cols);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t i = r * cols + c;
      xhat[i] = (xv[i] - mu) * inv_std[r];
      out[i] = xhat[i] * gv[c] + bv[c];
    }
  }
  return make_result(
      "layer_norm", rows, cols, std::move(out), {x, gamma, beta},
      [rows, cols, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
        const auto& gv = in(self, 1).value;
        const double n = static_cast<double>(cols);
        if (wants(self, 1)) {
          auto g = in(self, 1).grad_buffer();
          for (std::size_t i = 0; i < rows * cols; ++i) g[i % cols] += self.grad[i] * xhat[i];
        }
        if (wants(self, 2)) {
          auto g = in(self, 2).grad_buffer();
          for (std::size_t i = 0; i < rows * cols; ++i) g[i % cols] += self.grad[i];
        }
        if (wants(self, 0)) {
          auto g = in(self, 0).grad_buffer();
          for (std::size_t r = 0; r < rows; ++r) {
            double sum_d = 0.0, sum_dx = 0.0;
            for (std::size_t c = 0; c < cols; ++c) {
              const std::size_t i = r * cols + c;
              const double d = self.grad[i] * gv[c];
              sum_d += d;
              sum_dx += d * xhat[i];
            }
            for (std::size_t c = 0; c < cols; ++c) {
              const std::size_t i = r * cols + c;
              const double d = self.grad[i] * gv[c];
              g[i] += inv_std[r] * (d - sum_d / n - xhat[i] * sum_dx / n);
            }
          }
        }
      });
}

Tensor gather_rows(const Tensor& table, std::span<const std::size_t> ids) {
  const std::size_t cols = table.cols();
  std::vector<double> out(ids.size() * cols);
  const auto tv = table.values();
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] >= table.rows())
      shape_fail("gather_rows", table, "has no row " + std::to_string(ids[r]));
    std::copy_n(tv.begin() + static_cast<std::ptrdiff_t>(ids[r] * cols), cols,
                out.begin() + static_cast<std::ptrdiff_t>(r * cols));
  }
  std::vector<std::size_t> idx(ids.begin(), ids.end());
  return make_result("gather_rows", ids.size(), cols, std::move(out), {table},
                     [cols, idx = std::move(idx)](Node& self) {
                       auto g = in(self, 0).grad_buffer();
                       for (std::size_t r = 0; r < idx.size(); ++r)
                         for (std::size_t c = 0; c < cols; ++c)
                           g[idx[r] * cols + c] += self.grad[r * cols + c];
                     });
}

Tensor select_cols(const Tensor& x, std::span<const std::ptrdiff_t> cols_idx) {
  const std::size_t rows = x.rows(), in_cols = x.cols(), out_cols = cols_idx.size();
  for (std::ptrdiff_t c : cols_idx) {
    if (c >= static_cast<std::ptrdiff_t>(in_cols))
      shape_fail("select_cols", x, "has no column " + std::to_string(c));
  }
  std::vector<double> out(rows * out_cols, 0.0);
  const auto xv = x.values();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < out_cols; ++j)
      if (cols_idx[j] >= 0) out[r * out_cols + j] = xv[r * in_cols + cols_idx[j]];
  std::vector<std::ptrdiff_t> idx(cols_idx.begin(), cols_idx.end());
  return make_result("select_cols", rows, out_cols, std::move(out), {x},
                     [rows, in_cols, out_cols, idx = std::move(idx)](Node& self) {
                       auto g = in(self, 0).grad_buffer();
                       for (std::size_t r = 0; r < rows; ++r)
                         for (std::size_t j = 0; j < out_cols; ++j)
                           if (idx[j] >= 0)
                             g[r * in_cols + idx[j]] += self.grad[r * out_cols + j];
                     });
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  for (const Tensor& p : parts) {
    if (p.cols() != cols) shape_fail("concat_rows", parts.front(), p);
    rows += p.rows();
  }
  std::vector<double> out;
  out.reserve(rows * cols);
  for (const Tensor& p : parts) out.insert(out.end(), p.values().begin(), p.values().end());
  return make_result("concat_rows", rows, cols, std::move(out),
                     std::vector<Tensor>(parts.begin(), parts.end()), [](Node& self) {
                       std::size_t offset = 0;
                       for (std::size_t i = 0; i < self.parents.size(); ++i) {
                         Node& p = in(self, i);
                         if (p.requires_grad) {
                           auto g = p.grad_buffer();
                           for (std::size_t j = 0; j < p.value.size(); ++j)
                             g[j] += self.grad[offset + j];
                         }
                         offset += p.value.size();
                       }
                     });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  for (const Tensor& p : parts) {
    if (p.rows() != rows) shape_fail("concat_cols", parts.front(), p);
    cols += p.cols();
  }
  std::vector<double> out(rows * cols);
  std::size_t offset = 0;
  for (const Tensor& p : parts) {
    const auto pv = p.values();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < p.cols(); ++c) out[r * cols + offset + c] = pv[r * p.cols() + c];
    offset += p.cols();
  }
  return make_result("concat_cols", rows, cols, std::move(out),
                     std::vector<Tensor>(parts.begin(), parts.end()), [rows, cols](Node& self) {
                       std::size_t offset = 0;
                       for (std::size_t i = 0; i < self.parents.size(); ++i) {
                         Node& p = in(self, i);
                         if (p.requires_grad) {
                           auto g = p.grad_buffer();
                           for (std::size_t r = 0; r < rows; ++r)
                             for (std::size_t c = 0; c < p.cols; ++c)
                               g[r * p.cols + c] += self.grad[r * cols + offset + c];
                         }
                         offset += p.cols;
                       }
                     });
}

Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end) {
  if (begin > end || end > x.rows())
    shape_fail("slice_rows", x,
               "cannot be sliced to rows [" + std::to_string(begin) + "," + std::to_string(end) +
                   ")");
  const std::size_t cols = x.cols();
  std::vector<double> out(x.values().begin() + static_cast<std::ptrdiff_t>(begin * cols),
                          x.values().begin() + static_cast<std::ptrdiff_t>(end * cols));
  return make_result("slice_rows", end - begin, cols, std::move(out), {x},
                     [begin, cols](Node& self) {
                       auto g = in(self, 0).grad_buffer();
                       for (std::size_t i = 0; i < self.grad.size(); ++i)
                         g[begin * cols + i] += self.grad[i];
                     });
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end) {
  if (begin > end || end > x.cols())
    shape_fail("slice_cols", x,
               "cannot be sliced to cols [" + std::to_string(begin) + "," + std::to_string(end) +
                   ")");
  const std::size_t rows = x.rows(), cols = x.cols(), width = end - begin;
  std::vector<double> out(rows * width);
  const auto xv = x.values();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < width; ++c) out[r * width + c] = xv[r * cols + begin + c];
  return make_result("slice_cols", rows, width, std::move(out), {x},
                     [rows, cols, width, begin](Node& self) {
                       auto g = in(self, 0).grad_buffer();
                       for (std::size_t r = 0; r < rows; ++r)
                         for (std::size_t c = 0; c < width; ++c)
                           g[r * cols + begin + c] += self.grad[r * width + c];
                     });
}

Tensor segment_mean(const Tensor& x, std::span<const Span> spans) {
  const std::size_t cols = x.cols();
  std::vector<double> out(spans.size() * cols, 0.0);
  const auto xv = x.values();
  for (std::size_t s = 0; s < spans.size(); ++s) {
    const auto [b, e] = spans[s];
    if (b >= e || e > x.rows())
      shape_fail("segment_mean", x,
                 "has no row span [" + std::to_string(b) + "," + std::to_string(e) + ")");
    for (std::size_t r = b; r < e; ++r)
      for (std::size_t c = 0; c < cols; ++c) out[s * cols + c] += xv[r * cols + c];
    const double inv = 1.0 / static_cast<double>(e - b);
    for (std::size_t c = 0; c < cols; ++c) out[s * cols + c] *= inv;
  }
  std::vector<Span> sp(spans.begin(), spans.end());
  return make_result("segment_mean", spans.size(), cols, std::move(out), {x},
                     [cols, sp = std::move(sp)](Node& self) {
                       auto g = in(self, 0).grad_buffer();
                       for (std::size_t s = 0; s < sp.size(); ++s) {
                         const auto [b, e] = sp[s];
                         const double inv = 1.0 / static_cast<double>(e - b);
                         for (std::size_t r = b; r < e; ++r)
                           for (std::size_t c = 0; c < cols; ++c)
                             g[r * cols + c] += self.grad[s * cols + c] * inv;
                       }
                     });
}

Tensor dropout(const Tensor& x, double p, Rng& rng, bool train) {
  if (p < 0.0 || p >= 1.0) throw std::invalid_argument("dropout: p must lie in [0, 1)");
  if (!train || p == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - p);
  std::vector<double> factor(x.size());
  for (double& f : factor) f = rng.uniform() < p ? 0.0 : keep_scale;
  std::vector<double> out(x.size());
  const auto xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] * factor[i];
  return make_result("dropout", x.rows(), x.cols(), std::move(out), {x},
                     [factor = std::move(factor)](Node& self) {
                       auto g = in(self, 0).grad_buffer();
                       for (std::size_t i = 0; i < factor.size(); ++i)
                         g[i] += self.grad[i] * factor[i];
                     });
}

Tensor cross_entropy(const Tensor& logits, std::span<const std::size_t> targets,
                     const Tensor& mask) {
  const std::size_t rows = logits.rows(), cols = logits.cols();
  if (targets.size() != rows)
    shape_fail("cross_entropy", logits,
               "needs one target per row, got " + std::to_string(targets.size()));
  const MaskKind kind = mask_kind("cross_entropy", logits, mask);
  std::vector<double> logp(logits.size());
  softmax_rows(logits.values(), rows, cols, kind,
               kind == MaskKind::none ? std::span<const double>{} : mask.values(), logp, true);
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (targets[r] >= cols)
      shape_fail("cross_entropy", logits, "has no class " + std::to_string(targets[r]));
    total -= logp[r * cols + targets[r]];
  }
  std::vector<std::size_t> tgt(targets.begin(), targets.end());
  return make_result("cross_entropy", 1, 1, {total / static_cast<double>(rows)}, {logits},
                     [rows, cols, logp = std::move(logp), tgt = std::move(tgt)](Node& self) {
                       auto g = in(self, 0).grad_buffer();
                       const double upstream = self.grad[0] / static_cast<double>(rows);
                       for (std::size_t r = 0; r < rows; ++r) {
                         for (std::size_t c = 0; c < cols; ++c) {
                           const double p = std::exp(logp[r * cols + c]);
                           g[r * cols + c] += upstream * (p - (c == tgt[r] ? 1.0 : 0.0));
                         }
                       }
                     });
}

Tensor mse_loss(const Tensor& prediction, const Tensor& target) {
  if (prediction.rows() != target.rows() || prediction.cols() != target.cols())
    shape_fail("mse_loss", prediction, target);
  const std::size_t n = prediction.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = prediction.values()[i] - target.values()[i];
    total += d * d;
  }
  return make_result("mse_loss", 1, 1, {total / static_cast<double>(n)}, {prediction, target},
                     [n](Node& self) {
                       const auto& p = in(self, 0).value;
                       const auto& t = in(self, 1).value;
                       const double k = 2.0 * self.grad[0] / static_cast<double>(n);
                       if (wants(self, 0)) {
                         auto g = in(self, 0).grad_buffer();
                         for (std::size_t i = 0; i < n; ++i) g[i] += k * (p[i] - t[i]);
                       }
                       if (wants(self, 1)) {
                         auto g = in(self, 1).grad_buffer();
                         for (std::size_t i = 0; i < n; ++i) g[i] -= k * (p[i] - t[i]);
                       }
                     });
}

Tensor sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.values()) total += v;
  return make_result("sum", 1, 1, {total}, {x}, [](Node& self) {
    auto g = in(self, 0).grad_buffer();
    for (double& v : g) v += self.grad[0];
  });
}

Tensor mean(const Tensor& x) {
  return scale(sum(x), 1.0 / static_cast<double>(x.size()));
}

Tensor straight_through(const Tensor& soft, std::size_t hard_col, bool surrogate) {
  if (soft.rows() != 1 || hard_col >= soft.cols())
    shape_fail("straight_through", soft, "is not a row containing column " +
                                             std::to_string(hard_col));
  std::vector<double> out;
  if (surrogate) {
    out.assign(soft.values().begin(), soft.values().end());
  } else {
    out.assign(soft.cols(), 0.0);
    out[hard_col] = 1.0;
  }
  return make_result("straight_through", 1, soft.cols(), std::move(out), {soft}, [](Node& self) {
    auto g = in(self, 0).grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

}  // namespace gazenlu::diffcore

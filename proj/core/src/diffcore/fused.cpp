#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "gazenlu/diffcore/ops.hpp"
#include "kernels.hpp"

namespace gazenlu::diffcore {

using detail::Node;

namespace {

Node& in(Node& self, std::size_t i) { return *self.parents[i]; }
bool wants(const Node& self, std::size_t i) { return self.parents[i]->requires_grad; }

void expect_shape(const char* op, const char* what, const Tensor& t, std::size_t rows,
                  std::size_t cols) {
  if (t.rows() != rows || t.cols() != cols) {
    throw ShapeError(std::string(op) + ": " + what + " has shape " + t.shape_string() +
                     ", expected [" + std::to_string(rows) + "x" + std::to_string(cols) + "]");
  }
}

inline double sigm(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct GruTape {
  std::vector<double> r, z, n, gh_n, h_prev;
};

}  // namespace

Tensor gru(const Tensor& x, const Tensor& h0, const Tensor& w_ih, const Tensor& w_hh,
           const Tensor& b_ih, const Tensor& b_hh) {
  const std::size_t steps = x.rows(), in_dim = x.cols(), hid = h0.cols();
  const std::size_t h3 = 3 * hid;
  expect_shape("gru", "h0", h0, 1, hid);
  expect_shape("gru", "w_ih", w_ih, in_dim, h3);
  expect_shape("gru", "w_hh", w_hh, hid, h3);
  expect_shape("gru", "b_ih", b_ih, 1, h3);
  expect_shape("gru", "b_hh", b_hh, 1, h3);

  std::vector<double> gi(steps * h3, 0.0);
  kernels::gemm_nn(x.values().data(), w_ih.values().data(), gi.data(), steps, in_dim, h3);
  const auto bi = b_ih.values();
  const auto bh = b_hh.values();
  for (std::size_t t = 0; t < steps; ++t)
    for (std::size_t j = 0; j < h3; ++j) gi[t * h3 + j] += bi[j];

  GruTape tape;
  tape.r.resize(steps * hid);
  tape.z.resize(steps * hid);
  tape.n.resize(steps * hid);
  tape.gh_n.resize(steps * hid);
  tape.h_prev.resize(steps * hid);
  std::vector<double> out(steps * hid);
  std::vector<double> h(h0.values().begin(), h0.values().end());
  std::vector<double> gh(h3);
  const double* whh = w_hh.values().data();
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t j = 0; j < h3; ++j) gh[j] = bh[j];
    kernels::gemm_nn(h.data(), whh, gh.data(), 1, hid, h3);
    const double* g = gi.data() + t * h3;
    for (std::size_t j = 0; j < hid; ++j) {
      const std::size_t i = t * hid + j;
      const double r = sigm(g[j] + gh[j]);
      const double z = sigm(g[hid + j] + gh[hid + j]);
      const double n = std::tanh(g[2 * hid + j] + r * gh[2 * hid + j]);
      tape.r[i] = r;
      tape.z[i] = z;
      tape.n[i] = n;
      tape.gh_n[i] = gh[2 * hid + j];
      tape.h_prev[i] = h[j];
      out[i] = (1.0 - z) * n + z * h[j];
    }
    for (std::size_t j = 0; j < hid; ++j) h[j] = out[t * hid + j];
  }

  return make_result(
      "gru", steps, hid, std::move(out), {x, h0, w_ih, w_hh, b_ih, b_hh},
      [steps, in_dim, hid, h3, tape = std::move(tape)](Node& self) {
        const double* xv = in(self, 0).value.data();
        const double* wih = in(self, 2).value.data();
        const double* whh = in(self, 3).value.data();
        std::vector<double> dgi(steps * h3, 0.0);
        std::vector<double> dgh(h3);
        std::vector<double> carry(hid, 0.0);
        double* dwhh = wants(self, 3) ? in(self, 3).grad_buffer().data() : nullptr;
        double* dbhh = wants(self, 5) ? in(self, 5).grad_buffer().data() : nullptr;
        for (std::size_t t = steps; t-- > 0;) {
          double* dg = dgi.data() + t * h3;
          std::vector<double> dh_prev(hid);
          for (std::size_t j = 0; j < hid; ++j) {
            const std::size_t i = t * hid + j;
            const double dh = self.grad[i] + carry[j];
            const double r = tape.r[i], z = tape.z[i], n = tape.n[i];
            const double dn_pre = dh * (1.0 - z) * (1.0 - n * n);
            const double dz_pre = dh * (tape.h_prev[i] - n) * z * (1.0 - z);
            const double dr_pre = dn_pre * tape.gh_n[i] * r * (1.0 - r);
            dg[j] = dr_pre;
            dg[hid + j] = dz_pre;
            dg[2 * hid + j] = dn_pre;
            dgh[j] = dr_pre;
            dgh[hid + j] = dz_pre;
            dgh[2 * hid + j] = dn_pre * r;
            dh_prev[j] = dh * z;
          }
          kernels::gemm_nt(dgh.data(), whh, dh_prev.data(), 1, h3, hid);
          if (dwhh) kernels::gemm_tn(tape.h_prev.data() + t * hid, dgh.data(), dwhh, 1, hid, h3);
          if (dbhh)
            for (std::size_t j = 0; j < h3; ++j) dbhh[j] += dgh[j];
          carry = std::move(dh_prev);
        }
        if (wants(self, 0))
          kernels::gemm_nt(dgi.data(), wih, in(self, 0).grad_buffer().data(), steps, h3, in_dim);
        if (wants(self, 1)) {
          auto g = in(self, 1).grad_buffer();
          for (std::size_t j = 0; j < hid; ++j) g[j] += carry[j];
        }
        if (wants(self, 2))
          kernels::gemm_tn(xv, dgi.data(), in(self, 2).grad_buffer().data(), steps, in_dim, h3);
        if (wants(self, 4)) {
          auto g = in(self, 4).grad_buffer();
          for (std::size_t t = 0; t < steps; ++t)
            for (std::size_t j = 0; j < h3; ++j) g[j] += dgi[t * h3 + j];
        }
      });
}

Tensor multi_head_attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t heads,
                            const Tensor& key_mask) {
  const std::size_t tq = q.rows(), d = q.cols(), tk = k.rows();
  if (heads == 0 || d % heads != 0)
    throw ShapeError("multi_head_attention: width " + std::to_string(d) +
                     " not divisible by heads " + std::to_string(heads));
  expect_shape("multi_head_attention", "k", k, tk, d);
  expect_shape("multi_head_attention", "v", v, tk, d);
  if (key_mask.defined()) expect_shape("multi_head_attention", "key_mask", key_mask, 1, tk);
  const std::size_t dh = d / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));

  const auto qv = q.values();
  const auto kv = k.values();
  const auto vv = v.values();
  // probs[h][i][j]
  std::vector<double> probs(heads * tq * tk);
  std::vector<double> out(tq * d, 0.0);
  for (std::size_t h = 0; h < heads; ++h) {
    const std::size_t c0 = h * dh;
    for (std::size_t i = 0; i < tq; ++i) {
      double* p = probs.data() + (h * tq + i) * tk;
      double mx = -1e300;
      for (std::size_t j = 0; j < tk; ++j) {
        double s = 0.0;
        for (std::size_t c = 0; c < dh; ++c) s += qv[i * d + c0 + c] * kv[j * d + c0 + c];
        s = s * inv_sqrt + (key_mask.defined() ? key_mask.values()[j] : 0.0);
        p[j] = s;
        mx = std::max(mx, s);
      }
      double total = 0.0;
      for (std::size_t j = 0; j < tk; ++j) {
        p[j] = std::exp(p[j] - mx);
        total += p[j];
      }
      for (std::size_t j = 0; j < tk; ++j) p[j] /= total;
      for (std::size_t j = 0; j < tk; ++j) {
        const double pj = p[j];
        if (pj == 0.0) continue;
        for (std::size_t c = 0; c < dh; ++c) out[i * d + c0 + c] += pj * vv[j * d + c0 + c];
      }
    }
  }

  return make_result(
      "multi_head_attention", tq, d, std::move(out), {q, k, v},
      [tq, tk, d, dh, heads, inv_sqrt, probs = std::move(probs)](Node& self) {
        const auto& qv = in(self, 0).value;
        const auto& kv = in(self, 1).value;
        const auto& vv = in(self, 2).value;
        double* dq = wants(self, 0) ? in(self, 0).grad_buffer().data() : nullptr;
        double* dk = wants(self, 1) ? in(self, 1).grad_buffer().data() : nullptr;
        double* dv = wants(self, 2) ? in(self, 2).grad_buffer().data() : nullptr;
        std::vector<double> dp(tk);
        for (std::size_t h = 0; h < heads; ++h) {
          const std::size_t c0 = h * dh;
          for (std::size_t i = 0; i < tq; ++i) {
            const double* p = probs.data() + (h * tq + i) * tk;
            const double* go = self.grad.data() + i * d + c0;
            double dot = 0.0;
            for (std::size_t j = 0; j < tk; ++j) {
              double s = 0.0;
              for (std::size_t c = 0; c < dh; ++c) s += go[c] * vv[j * d + c0 + c];
              dp[j] = s;
              dot += s * p[j];
              if (dv)
                for (std::size_t c = 0; c < dh; ++c) dv[j * d + c0 + c] += p[j] * go[c];
            }
            for (std::size_t j = 0; j < tk; ++j) {
              const double ds = p[j] * (dp[j] - dot) * inv_sqrt;
              if (ds == 0.0) continue;
              if (dq)
                for (std::size_t c = 0; c < dh; ++c) dq[i * d + c0 + c] += ds * kv[j * d + c0 + c];
              if (dk)
                for (std::size_t c = 0; c < dh; ++c) dk[j * d + c0 + c] += ds * qv[i * d + c0 + c];
            }
          }
        }
      });
}

}  // namespace gazenlu::diffcore

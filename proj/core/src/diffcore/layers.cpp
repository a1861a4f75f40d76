#include "gazenlu/diffcore/layers.hpp"

#include <cmath>
#include <stdexcept>

#include "gazenlu/diffcore/ops.hpp"
#include "gazenlu/diffcore/rng.hpp"

namespace gazenlu::diffcore {

void ParamList::add(std::string name, Tensor& tensor) {
  if (find(name) != nullptr) throw std::logic_error("duplicate parameter name: " + name);
  entries_.push_back({std::move(name), &tensor});
}

void ParamList::append(const ParamList& other) {
  for (const NamedTensor& e : other.entries_) add(e.name, *e.tensor);
}

std::size_t ParamList::scalar_count() const {
  std::size_t n = 0;
  for (const NamedTensor& e : entries_) n += e.tensor->size();
  return n;
}

Tensor* ParamList::find(std::string_view name) const {
  for (const NamedTensor& e : entries_)
    if (e.name == name) return e.tensor;
  return nullptr;
}

void ParamList::zero_grad() const {
  for (const NamedTensor& e : entries_) e.tensor->zero_grad();
}

void ParamList::set_requires_grad(bool on) const {
  for (const NamedTensor& e : entries_) e.tensor->set_requires_grad(on);
}

void ParamList::convert(Precision p) const {
  for (const NamedTensor& e : entries_) *e.tensor = e.tensor->to(p);
}

std::vector<std::vector<double>> ParamList::snapshot() const {
  std::vector<std::vector<double>> out;
  out.reserve(entries_.size());
  for (const NamedTensor& e : entries_)
    out.emplace_back(e.tensor->values().begin(), e.tensor->values().end());
  return out;
}

void ParamList::restore(const std::vector<std::vector<double>>& values) const {
  if (values.size() != entries_.size())
    throw std::invalid_argument("restore: snapshot has wrong parameter count");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    auto dst = entries_[i].tensor->mutable_values();
    if (dst.size() != values[i].size())
      throw std::invalid_argument("restore: size mismatch for " + entries_[i].name);
    std::copy(values[i].begin(), values[i].end(), dst.begin());
  }
}

Tensor Initializer::uniform(std::string_view name, std::size_t rows, std::size_t cols,
                            double bound) const {
  Rng rng(seed_, fnv1a64(name));
  std::vector<double> v(rows * cols);
  for (double& x : v) x = (2.0 * rng.uniform() - 1.0) * bound;
  Tensor t = Tensor::from_values(rows, cols, std::move(v));
  t.set_requires_grad(true);
  return t;
}

Tensor Initializer::normal(std::string_view name, std::size_t rows, std::size_t cols,
                           double stddev) const {
  Rng rng(seed_, fnv1a64(name));
  std::vector<double> v(rows * cols);
  for (double& x : v) x = rng.normal() * stddev;
  Tensor t = Tensor::from_values(rows, cols, std::move(v));
  t.set_requires_grad(true);
  return t;
}

Tensor Initializer::constant(std::size_t rows, std::size_t cols, double value) const {
  Tensor t = Tensor::full(rows, cols, value);
  t.set_requires_grad(true);
  return t;
}

Linear Linear::create(const Initializer& init, const std::string& name, std::size_t in,
                      std::size_t out, bool with_bias) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  Linear l;
  l.weight = init.uniform(name + ".weight", in, out, bound);
  if (with_bias) l.bias = init.uniform(name + ".bias", 1, out, bound);
  return l;
}

Tensor Linear::operator()(const Tensor& x) const {
  Tensor y = matmul(x, weight);
  return bias.defined() ? add(y, bias) : y;
}

void Linear::collect(ParamList& params, const std::string& name) {
  params.add(name + ".weight", weight);
  if (bias.defined()) params.add(name + ".bias", bias);
}

LayerNorm LayerNorm::create(const Initializer& init, std::size_t width) {
  return {init.constant(1, width, 1.0), init.constant(1, width, 0.0)};
}

Tensor LayerNorm::operator()(const Tensor& x) const { return layer_norm(x, gamma, beta); }

void LayerNorm::collect(ParamList& params, const std::string& name) {
  params.add(name + ".gamma", gamma);
  params.add(name + ".beta", beta);
}

Gru Gru::create(const Initializer& init, const std::string& name, std::size_t in,
                std::size_t hidden) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  Gru g;
  g.w_ih = init.uniform(name + ".w_ih", in, 3 * hidden, bound);
  g.w_hh = init.uniform(name + ".w_hh", hidden, 3 * hidden, bound);
  g.b_ih = init.uniform(name + ".b_ih", 1, 3 * hidden, bound);
  g.b_hh = init.uniform(name + ".b_hh", 1, 3 * hidden, bound);
  return g;
}

Tensor Gru::operator()(const Tensor& x, const Tensor& h0) const {
  return gru(x, h0, w_ih, w_hh, b_ih, b_hh);
}

void Gru::collect(ParamList& params, const std::string& name) {
  params.add(name + ".w_ih", w_ih);
  params.add(name + ".w_hh", w_hh);
  params.add(name + ".b_ih", b_ih);
  params.add(name + ".b_hh", b_hh);
}

}  // namespace gazenlu::diffcore

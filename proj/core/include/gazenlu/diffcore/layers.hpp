#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gazenlu/diffcore/tensor.hpp"

namespace gazenlu::diffcore {

struct NamedTensor {
  std::string name;
  Tensor* tensor = nullptr;
};

/// Ordered, named view over the parameters of a model. Order is the
/// declaration order and defines the checkpoint layout.
class ParamList {
 public:
  void add(std::string name, Tensor& tensor);
  void append(const ParamList& other);

  std::span<const NamedTensor> entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t scalar_count() const;
  Tensor* find(std::string_view name) const;

  void zero_grad() const;
  void set_requires_grad(bool on) const;
  /// Replaces every parameter with a fresh leaf of the given precision.
  void convert(Precision p) const;
  /// Copies of all values, in order.
  std::vector<std::vector<double>> snapshot() const;
  void restore(const std::vector<std::vector<double>>& values) const;

 private:
  std::vector<NamedTensor> entries_;
};

/// Deterministic parameter initialisation. Each tensor draws from its own
/// stream keyed by its name, so values do not depend on creation order.
class Initializer {
 public:
  explicit Initializer(std::uint64_t seed) : seed_(seed) {}

  Tensor uniform(std::string_view name, std::size_t rows, std::size_t cols, double bound) const;
  Tensor normal(std::string_view name, std::size_t rows, std::size_t cols, double stddev) const;
  Tensor constant(std::size_t rows, std::size_t cols, double value) const;

 private:
  std::uint64_t seed_;
};

struct Linear {
  Tensor weight;  // in × out
  Tensor bias;    // 1 × out, undefined when created without bias

  static Linear create(const Initializer& init, const std::string& name, std::size_t in,
                       std::size_t out, bool with_bias = true);
  Tensor operator()(const Tensor& x) const;
  void collect(ParamList& params, const std::string& name);
  std::size_t in_features() const { return weight.rows(); }
  std::size_t out_features() const { return weight.cols(); }
};

struct LayerNorm {
  Tensor gamma;
  Tensor beta;

  static LayerNorm create(const Initializer& init, std::size_t width);
  Tensor operator()(const Tensor& x) const;
  void collect(ParamList& params, const std::string& name);
};

struct Gru {
  Tensor w_ih;  // in × 3h
  Tensor w_hh;  // h × 3h
  Tensor b_ih;
  Tensor b_hh;

  static Gru create(const Initializer& init, const std::string& name, std::size_t in,
                    std::size_t hidden);
  std::size_t hidden() const { return w_hh.rows(); }
  std::size_t input_width() const { return w_ih.rows(); }
  /// T×in sequence from a 1×h state → T×h states.
  Tensor operator()(const Tensor& x, const Tensor& h0) const;
  void collect(ParamList& params, const std::string& name);
};

}  // namespace gazenlu::diffcore

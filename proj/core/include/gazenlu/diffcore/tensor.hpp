#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gazenlu::diffcore {

/// Storage precision. Training runs in f32 (every stored value and gradient
/// is rounded to the nearest float); f64 exists for gradient checking.
enum class Precision : std::uint8_t { f32, f64 };

/// Raised when operand shapes do not conform; the message names the op and
/// both shapes.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

struct Node {
  std::uint64_t id = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  Precision precision = Precision::f32;
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<double> value;
  std::vector<double> grad;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into the parents' grads.
  std::function<void(Node&)> backward;

  bool is_leaf() const noexcept { return !backward; }
  /// Grad buffer, zero-allocated on first use.
  std::span<double> grad_buffer();
};

std::uint64_t next_node_id();
double round_to(Precision p, double x);
void round_in_place(Precision p, std::span<double> xs);

}  // namespace detail

/// Dense row-major 2-D tensor with reverse-mode gradient tracking.
/// Vectors are 1×n rows and scalars are 1×1. Copies share storage.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

  static Tensor zeros(std::size_t rows, std::size_t cols, Precision p = Precision::f32);
  static Tensor full(std::size_t rows, std::size_t cols, double value,
                     Precision p = Precision::f32);
  static Tensor from_values(std::size_t rows, std::size_t cols, std::vector<double> values,
                            Precision p = Precision::f32);
  static Tensor scalar(double value, Precision p = Precision::f32);

  bool defined() const noexcept { return static_cast<bool>(node_); }
  std::size_t rows() const { return node_->rows; }
  std::size_t cols() const { return node_->cols; }
  std::size_t size() const { return node_->value.size(); }
  Precision precision() const { return node_->precision; }
  std::uint64_t id() const { return node_->id; }
  const char* op_name() const { return node_->op; }
  std::string shape_string() const;

  std::span<const double> values() const { return node_->value; }
  /// Writable storage; only meaningful for leaves (parameters, inputs).
  std::span<double> mutable_values() { return node_->value; }
  double operator()(std::size_t r, std::size_t c) const { return node_->value[r * cols() + c]; }
  double item() const;

  bool requires_grad() const { return node_->requires_grad; }
  Tensor& set_requires_grad(bool on);
  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const double> grad() const { return node_->grad; }
  /// Drops the gradient buffer (the grad becomes absent).
  void zero_grad() { node_->grad.clear(); }

  /// New leaf holding a copy of the values, without history.
  Tensor detach() const;
  /// New leaf converted to the given precision (values re-rounded for f32).
  Tensor to(Precision p) const;

  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  std::shared_ptr<detail::Node> node_;
};

/// Disables graph recording on this thread while alive (evaluation paths).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

/// Runs reverse-mode accumulation from a 1×1 loss. Interior gradients are
/// recomputed from scratch on every call; leaf gradients accumulate.
/// Nodes are visited in descending creation id, a fixed topological order.
void backward(const Tensor& loss);

/// Builds an op result. `inputs` become parents when any of them requires
/// grad; `backward` is then attached. Values are rounded to the promoted
/// precision of the inputs.
Tensor make_result(const char* op, std::size_t rows, std::size_t cols, std::vector<double> value,
                   std::vector<Tensor> inputs, std::function<void(detail::Node&)> backward);

}  // namespace gazenlu::diffcore

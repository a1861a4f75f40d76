#include "gazenlu/diffcore/tensor.hpp"

#include <algorithm>
#include <unordered_set>

namespace gazenlu::diffcore {
namespace detail {

std::span<double> Node::grad_buffer() {
  if (grad.empty()) grad.assign(value.size(), 0.0);
  return grad;
}

std::uint64_t next_node_id() {
  // Ids only need to be monotone within a graph, and graphs never cross
  // threads, so a per-thread counter suffices.
  thread_local std::uint64_t counter = 0;
  return ++counter;
}

double round_to(Precision p, double x) {
  return p == Precision::f32 ? static_cast<double>(static_cast<float>(x)) : x;
}

void round_in_place(Precision p, std::span<double> xs) {
  if (p != Precision::f32) return;
  for (double& x : xs) x = static_cast<double>(static_cast<float>(x));
}

namespace {

std::shared_ptr<Node> new_leaf(std::size_t rows, std::size_t cols, Precision p,
                               std::vector<double> values) {
  auto node = std::make_shared<Node>();
  node->id = next_node_id();
  node->rows = rows;
  node->cols = cols;
  node->precision = p;
  node->value = std::move(values);
  round_in_place(p, node->value);
  return node;
}

}  // namespace

thread_local bool g_grad_enabled = true;

}  // namespace detail

NoGradGuard::NoGradGuard() : previous_(detail::g_grad_enabled) { detail::g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { detail::g_grad_enabled = previous_; }
bool grad_enabled() { return detail::g_grad_enabled; }

Tensor Tensor::zeros(std::size_t rows, std::size_t cols, Precision p) {
  return Tensor(detail::new_leaf(rows, cols, p, std::vector<double>(rows * cols, 0.0)));
}

Tensor Tensor::full(std::size_t rows, std::size_t cols, double value, Precision p) {
  return Tensor(detail::new_leaf(rows, cols, p, std::vector<double>(rows * cols, value)));
}

Tensor Tensor::from_values(std::size_t rows, std::size_t cols, std::vector<double> values,
                           Precision p) {
  if (values.size() != rows * cols) {
    throw ShapeError("from_values: " + std::to_string(values.size()) + " values for shape [" +
                     std::to_string(rows) + "x" + std::to_string(cols) + "]");
  }
  return Tensor(detail::new_leaf(rows, cols, p, std::move(values)));
}

Tensor Tensor::scalar(double value, Precision p) { return full(1, 1, value, p); }

std::string Tensor::shape_string() const {
  return "[" + std::to_string(rows()) + "x" + std::to_string(cols()) + "]";
}

double Tensor::item() const {
  if (size() != 1) throw ShapeError("item: tensor " + shape_string() + " is not a scalar");
  return node_->value[0];
}

Tensor& Tensor::set_requires_grad(bool on) {
  if (!node_->is_leaf()) throw std::logic_error("set_requires_grad: only leaves can be toggled");
  node_->requires_grad = on;
  if (!on) node_->grad.clear();
  return *this;
}

Tensor Tensor::detach() const {
  return Tensor(detail::new_leaf(rows(), cols(), precision(), node_->value));
}

Tensor Tensor::to(Precision p) const {
  Tensor out(detail::new_leaf(rows(), cols(), p, node_->value));
  out.node_->requires_grad = node_->requires_grad;
  return out;
}

Tensor make_result(const char* op, std::size_t rows, std::size_t cols, std::vector<double> value,
                   std::vector<Tensor> inputs, std::function<void(detail::Node&)> backward) {
  auto node = std::make_shared<detail::Node>();
  node->id = detail::next_node_id();
  node->rows = rows;
  node->cols = cols;
  node->op = op;
  Precision p = Precision::f32;
  bool needs_grad = false;
  for (const Tensor& in : inputs) {
    if (in.precision() == Precision::f64) p = Precision::f64;
    needs_grad = needs_grad || in.requires_grad();
  }
  node->precision = p;
  node->value = std::move(value);
  detail::round_in_place(p, node->value);
  if (needs_grad && detail::g_grad_enabled) {
    node->requires_grad = true;
    node->parents.reserve(inputs.size());
    for (Tensor& in : inputs) node->parents.push_back(in.node());
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw std::invalid_argument("backward: loss must be a scalar, got " +
                                (loss.defined() ? loss.shape_string() : std::string("undefined")));
  }
  if (!loss.requires_grad()) return;

  std::vector<detail::Node*> order;
  std::unordered_set<const detail::Node*> seen;
  std::vector<detail::Node*> stack{loss.node().get()};
  seen.insert(stack.back());
  while (!stack.empty()) {
    detail::Node* n = stack.back();
    stack.pop_back();
    order.push_back(n);
    for (const auto& parent : n->parents) {
      if (parent->requires_grad && seen.insert(parent.get()).second) stack.push_back(parent.get());
    }
  }
  std::sort(order.begin(), order.end(),
            [](const detail::Node* a, const detail::Node* b) { return a->id > b->id; });

  for (detail::Node* n : order) {
    if (!n->is_leaf()) n->grad.clear();
  }
  loss.node()->grad_buffer()[0] += 1.0;

  for (detail::Node* n : order) {
    if (n->is_leaf() || n->grad.empty()) continue;
    detail::round_in_place(n->precision, n->grad);
    n->backward(*n);
  }
  for (detail::Node* n : order) {
    if (n->is_leaf()) detail::round_in_place(n->precision, n->grad);
  }
}

}  // namespace gazenlu::diffcore

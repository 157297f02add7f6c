#pragma once

// Dense row-major 64-bit tensors with a recorded computation graph for
// reverse-mode differentiation.
//
// A Tensor is a cheap handle onto a graph node. Operations on tensors that
// require gradients record their parents and a local backward rule; calling
// backward() on a scalar result walks the recorded graph once in reverse
// topological order. Leaf tensors (parameters) accumulate into their grad
// buffer across calls until zero_grad() is called. Interior gradients are
// recomputed from scratch on every backward() call.
//
// Graphs are not synchronized. One graph per thread; shared leaves may be read
// concurrently only while no thread calls backward().

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <vector>

namespace rpr {

using Shape = std::vector<std::size_t>;

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  bool leaf = true;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into the parents' grad buffers.
  std::function<void(const Node&)> backward;
};

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;

  /// Builds a rows x cols leaf. Throws ShapeError if values.size() != rows*cols.
  Tensor(std::size_t rows, std::size_t cols, std::vector<double> values,
         bool requires_grad = false);

  static Tensor zeros(std::size_t rows, std::size_t cols, bool requires_grad = false);
  static Tensor filled(std::size_t rows, std::size_t cols, double value,
                       bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor row(std::vector<double> values, bool requires_grad = false);
  static Tensor row(std::initializer_list<double> values, bool requires_grad = false);
  static Tensor from_rows(const std::vector<std::vector<double>>& rows,
                          bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rows() const;
  std::size_t cols() const;
  std::size_t numel() const;

  std::span<const double> values() const;
  /// Writable view of a leaf's storage. Throws StateError on interior nodes,
  /// whose values are owned by the graph.
  std::span<double> mutable_values();
  double item() const;
  double at(std::size_t r, std::size_t c) const;
  std::vector<double> row_values(std::size_t r) const;

  bool requires_grad() const;
  void set_requires_grad(bool on);
  bool is_leaf() const;

  bool has_grad() const;
  std::span<const double> grad() const;
  void zero_grad();
  void clear_grad();

  /// Same values, no history, no gradient requirement. Storage is copied.
  Tensor detach() const;
  /// Deep copy of a leaf including its requires_grad flag (grad not copied).
  Tensor clone() const;

  // For operation implementations.
  const std::shared_ptr<detail::Node>& node() const { return node_; }
  static Tensor from_node(std::shared_ptr<detail::Node> node);

 private:
  std::shared_ptr<detail::Node> node_;
};

/// Records gradients only while enabled. Thread-local.
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Accumulates d(loss)/d(leaf) into every participating leaf that requires
/// grad. loss must hold exactly one element (ShapeError otherwise).
void backward(const Tensor& loss);

namespace detail {

/// Creates the result node of an operation. When gradients are enabled and
/// any parent requires them, the parents and backward rule are recorded.
Tensor make_result(Shape shape, std::vector<double> value,
                   std::vector<Tensor> parents,
                   std::function<void(const Node&)> backward_rule);

/// Grad buffer of a parent, or nullptr when that parent does not need one.
std::vector<double>* grad_of(const Node& self, std::size_t parent);

}  // namespace detail

// ---- Differentiable operations. All operands are rank-2. ----

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
/// Elementwise product.
Tensor mul(const Tensor& a, const Tensor& b);
/// Adds a 1 x n row to every row of an m x n tensor.
Tensor add_bias(const Tensor& a, const Tensor& bias);
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double offset);
/// Multiplies every element of a by the single element of s.
Tensor scale_by(const Tensor& a, const Tensor& s);

Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
/// log(1 + exp(x)), computed without overflow.
Tensor softplus(const Tensor& a);

Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor slice_row(const Tensor& a, std::size_t r);
/// Gathers rows of table by index (embedding lookup).
Tensor gather_rows(const Tensor& table, std::span<const std::size_t> ids);
Tensor mean_rows(const Tensor& a);
Tensor sum(const Tensor& a);
/// Single element (r, c) as a 1 x 1 tensor.
Tensor pick(const Tensor& a, std::size_t r, std::size_t c);
/// log(sum(exp(a))) over every element, max-shifted.
Tensor logsumexp(const Tensor& a);
/// Row-wise softmax of a / tau.
Tensor softmax_rows(const Tensor& a, double tau);

bool all_finite(std::span<const double> values);

}  // namespace rpr

#include "rpr/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_set>
#include <utility>

#include "rpr/errors.hpp"

namespace rpr {

namespace {

thread_local bool g_grad_enabled = true;

std::string shape_str(const Shape& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + ")";
}

void require_defined(const Tensor& t, const char* op) {
  if (!t.defined()) throw ShapeError(std::string(op) + ": undefined tensor");
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  require_defined(a, op);
  require_defined(b, op);
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                     " vs " + shape_str(b.shape()));
  }
}

void axpy(std::vector<double>& dst, std::span<const double> src, double f = 1.0) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += f * src[i];
}

// Unary elementwise op with derivative expressed through (input, output).
template <typename Fwd, typename Deriv>
Tensor unary(const Tensor& a, Fwd fwd, Deriv deriv, const char* op) {
  require_defined(a, op);
  auto in = a.values();
  std::vector<double> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = fwd(in[i]);
  return detail::make_result(a.shape(), std::move(out), {a}, [deriv](const detail::Node& self) {
    if (auto* g = detail::grad_of(self, 0)) {
      const auto& x = self.parents[0]->value;
      for (std::size_t i = 0; i < g->size(); ++i) {
        (*g)[i] += self.grad[i] * deriv(x[i], self.value[i]);
      }
    }
  });
}

}  // namespace

// ---------------------------------------------------------------- Tensor

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> values,
               bool requires_grad) {
  if (values.size() != rows * cols) {
    throw ShapeError("tensor data length " + std::to_string(values.size()) +
                     " does not match shape (" + std::to_string(rows) + "x" +
                     std::to_string(cols) + ")");
  }
  node_ = std::make_shared<detail::Node>();
  node_->shape = {rows, cols};
  node_->value = std::move(values);
  node_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(std::size_t rows, std::size_t cols, bool requires_grad) {
  return Tensor(rows, cols, std::vector<double>(rows * cols, 0.0), requires_grad);
}

Tensor Tensor::filled(std::size_t rows, std::size_t cols, double value, bool requires_grad) {
  return Tensor(rows, cols, std::vector<double>(rows * cols, value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor(1, 1, {value}, requires_grad);
}

Tensor Tensor::row(std::vector<double> values, bool requires_grad) {
  const std::size_t n = values.size();
  return Tensor(1, n, std::move(values), requires_grad);
}

Tensor Tensor::row(std::initializer_list<double> values, bool requires_grad) {
  return row(std::vector<double>(values), requires_grad);
}

Tensor Tensor::from_rows(const std::vector<std::vector<double>>& rows, bool requires_grad) {
  if (rows.empty()) return Tensor(0, 0, {}, requires_grad);
  const std::size_t cols = rows.front().size();
  std::vector<double> flat;
  flat.reserve(rows.size() * cols);
  for (const auto& r : rows) {
    if (r.size() != cols) throw ShapeError("from_rows: ragged rows");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return Tensor(rows.size(), cols, std::move(flat), requires_grad);
}

Tensor Tensor::from_node(std::shared_ptr<detail::Node> node) {
  Tensor t;
  t.node_ = std::move(node);
  return t;
}

const Shape& Tensor::shape() const {
  static const Shape empty{};
  return node_ ? node_->shape : empty;
}

std::size_t Tensor::rows() const { return node_ ? node_->shape[0] : 0; }
std::size_t Tensor::cols() const { return node_ ? node_->shape[1] : 0; }
std::size_t Tensor::numel() const { return node_ ? node_->value.size() : 0; }

std::span<const double> Tensor::values() const {
  if (!node_) return {};
  return node_->value;
}

std::span<double> Tensor::mutable_values() {
  if (!node_) return {};
  if (!node_->leaf) throw StateError("mutable_values on a non-leaf tensor");
  return node_->value;
}

double Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor with " + std::to_string(numel()) + " elements");
  return node_->value[0];
}

double Tensor::at(std::size_t r, std::size_t c) const {
  if (!node_ || r >= rows() || c >= cols()) throw ShapeError("at(): index out of range");
  return node_->value[r * cols() + c];
}

std::vector<double> Tensor::row_values(std::size_t r) const {
  if (!node_ || r >= rows()) throw ShapeError("row_values(): index out of range");
  auto first = node_->value.begin() + static_cast<std::ptrdiff_t>(r * cols());
  return {first, first + static_cast<std::ptrdiff_t>(cols())};
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

void Tensor::set_requires_grad(bool on) {
  if (!node_) throw StateError("set_requires_grad on undefined tensor");
  if (!node_->leaf) throw StateError("set_requires_grad on a non-leaf tensor");
  node_->requires_grad = on;
}

bool Tensor::is_leaf() const { return !node_ || node_->leaf; }

bool Tensor::has_grad() const { return node_ && node_->grad.size() == node_->value.size(); }

std::span<const double> Tensor::grad() const {
  if (!has_grad()) return {};
  return node_->grad;
}

void Tensor::zero_grad() {
  if (node_) node_->grad.assign(node_->value.size(), 0.0);
}

void Tensor::clear_grad() {
  if (node_) node_->grad.clear();
}

Tensor Tensor::detach() const {
  require_defined(*this, "detach");
  return Tensor(rows(), cols(), node_->value, false);
}

Tensor Tensor::clone() const {
  require_defined(*this, "clone");
  return Tensor(rows(), cols(), node_->value, node_->requires_grad);
}

// ---------------------------------------------------------------- graph

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

namespace detail {

Tensor make_result(Shape shape, std::vector<double> value, std::vector<Tensor> parents,
                   std::function<void(const Node&)> backward_rule) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  bool needs_grad = false;
  if (g_grad_enabled) {
    for (const auto& p : parents) needs_grad = needs_grad || p.requires_grad();
  }
  if (needs_grad) {
    node->requires_grad = true;
    node->leaf = false;
    node->parents.reserve(parents.size());
    for (const auto& p : parents) node->parents.push_back(p.node());
    node->backward = std::move(backward_rule);
  }
  return Tensor::from_node(std::move(node));
}

std::vector<double>* grad_of(const Node& self, std::size_t parent) {
  Node& p = *self.parents[parent];
  return p.requires_grad ? &p.grad : nullptr;
}

}  // namespace detail

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ShapeError("backward: loss must be a scalar, got " + shape_str(loss.shape()));
  }
  detail::Node* root = loss.node().get();
  if (!root->requires_grad) return;

  // Iterative post-order DFS: parents land before children in `order`.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen{root};
  std::vector<std::pair<detail::Node*, std::size_t>> stack{{root, 0}};
  while (!stack.empty()) {
    auto& top = stack.back();
    if (top.second < top.first->parents.size()) {
      detail::Node* p = top.first->parents[top.second++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(top.first);
      stack.pop_back();
    }
  }

  for (detail::Node* n : order) {
    if (!n->leaf || n->grad.size() != n->value.size()) n->grad.assign(n->value.size(), 0.0);
  }
  root->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if (!(*it)->leaf && (*it)->backward) (*it)->backward(**it);
  }
}

// ---------------------------------------------------------------- ops

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_defined(a, "matmul");
  require_defined(b, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) {
    throw ShapeError("matmul: " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  }
  auto av = a.values();
  auto bv = b.values();
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double* orow = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double x = av[i * k + p];
      if (x == 0.0) continue;
      const double* brow = bv.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += x * brow[j];
    }
  }
  return detail::make_result({m, n}, std::move(out), {a, b}, [m, k, n](const detail::Node& self) {
    const auto& A = self.parents[0]->value;
    const auto& B = self.parents[1]->value;
    const auto& G = self.grad;
    if (auto* ga = detail::grad_of(self, 0)) {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          const double* grow = G.data() + i * n;
          const double* brow = B.data() + p * n;
          for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
          (*ga)[i * k + p] += acc;
        }
      }
    }
    if (auto* gb = detail::grad_of(self, 1)) {
      for (std::size_t i = 0; i < m; ++i) {
        const double* grow = G.data() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
          const double x = A[i * k + p];
          if (x == 0.0) continue;
          double* dst = gb->data() + p * n;
          for (std::size_t j = 0; j < n; ++j) dst[j] += x * grow[j];
        }
      }
    }
  });
}

Tensor transpose(const Tensor& a) {
  require_defined(a, "transpose");
  const std::size_t m = a.rows(), n = a.cols();
  auto av = a.values();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = av[i * n + j];
  return detail::make_result({n, m}, std::move(out), {a}, [m, n](const detail::Node& self) {
    if (auto* g = detail::grad_of(self, 0)) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) (*g)[i * n + j] += self.grad[j * m + i];
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  auto av = a.values();
  auto bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return detail::make_result(a.shape(), std::move(out), {a, b}, [](const detail::Node& self) {
    if (auto* g = detail::grad_of(self, 0)) axpy(*g, self.grad);
    if (auto* g = detail::grad_of(self, 1)) axpy(*g, self.grad);
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  auto av = a.values();
  auto bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  return detail::make_result(a.shape(), std::move(out), {a, b}, [](const detail::Node& self) {
    if (auto* g = detail::grad_of(self, 0)) axpy(*g, self.grad);
    if (auto* g = detail::grad_of(self, 1)) axpy(*g, self.grad, -1.0);
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  auto av = a.values();
  auto bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return detail::make_result(a.shape(), std::move(out), {a, b}, [](const detail::Node& self) {
    const auto& A = self.parents[0]->value;
    const auto& B = self.parents[1]->value;
    if (auto* g = detail::grad_of(self, 0))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i] * B[i];
    if (auto* g = detail::grad_of(self, 1))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i] * A[i];
  });
}

Tensor add_bias(const Tensor& a, const Tensor& bias) {
  require_defined(a, "add_bias");
  require_defined(bias, "add_bias");
  const std::size_t m = a.rows(), n = a.cols();
  if (bias.rows() != 1 || bias.cols() != n) {
    throw ShapeError("add_bias: " + shape_str(a.shape()) + " + " + shape_str(bias.shape()));
  }
  auto av = a.values();
  auto bv = bias.values();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = av[i * n + j] + bv[j];
  return detail::make_result(a.shape(), std::move(out), {a, bias}, [m, n](const detail::Node& self) {
    if (auto* g = detail::grad_of(self, 0)) axpy(*g, self.grad);
    if (auto* g = detail::grad_of(self, 1))
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) (*g)[j] += self.grad[i * n + j];
  });
}

Tensor scale(const Tensor& a, double factor) {
  return unary(a, [factor](double x) { return factor * x; },
               [factor](double, double) { return factor; }, "scale");
}

Tensor add_scalar(const Tensor& a, double offset) {
  return unary(a, [offset](double x) { return x + offset; },
               [](double, double) { return 1.0; }, "add_scalar");
}

Tensor scale_by(const Tensor& a, const Tensor& s) {
  require_defined(a, "scale_by");
  require_defined(s, "scale_by");
  if (s.numel() != 1) throw ShapeError("scale_by: factor must be a single element");
  const double f = s.item();
  auto av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f * av[i];
  return detail::make_result(a.shape(), std::move(out), {a, s}, [](const detail::Node& self) {
    const auto& A = self.parents[0]->value;
    const double f = self.parents[1]->value[0];
    if (auto* g = detail::grad_of(self, 0)) axpy(*g, self.grad, f);
    if (auto* g = detail::grad_of(self, 1)) {
      double acc = 0.0;
      for (std::size_t i = 0; i < A.size(); ++i) acc += self.grad[i] * A[i];
      (*g)[0] += acc;
    }
  });
}

Tensor tanh(const Tensor& a) {
  return unary(a, [](double x) { return std::tanh(x); },
               [](double, double y) { return 1.0 - y * y; }, "tanh");
}

Tensor sigmoid(const Tensor& a) {
  return unary(a,
               [](double x) {
                 if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
                 const double e = std::exp(x);
                 return e / (1.0 + e);
               },
               [](double, double y) { return y * (1.0 - y); }, "sigmoid");
}

Tensor softplus(const Tensor& a) {
  return unary(a,
               [](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); },
               [](double x, double) {
                 if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
                 const double e = std::exp(x);
                 return e / (1.0 + e);
               },
               "softplus");
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const std::size_t m = parts.front().rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    require_defined(p, "concat_cols");
    if (p.rows() != m) throw ShapeError("concat_cols: row count mismatch");
    widths.push_back(p.cols());
    total += p.cols();
  }
  std::vector<double> out(m * total);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    auto v = parts[k].values();
    for (std::size_t i = 0; i < m; ++i)
      std::copy_n(v.data() + i * widths[k], widths[k], out.data() + i * total + offset);
    offset += widths[k];
  }
  return detail::make_result({m, total}, std::move(out), parts,
                             [m, total, widths](const detail::Node& self) {
                               std::size_t off = 0;
                               for (std::size_t k = 0; k < widths.size(); ++k) {
                                 if (auto* g = detail::grad_of(self, k)) {
                                   for (std::size_t i = 0; i < m; ++i)
                                     for (std::size_t j = 0; j < widths[k]; ++j)
                                       (*g)[i * widths[k] + j] += self.grad[i * total + off + j];
                                 }
                                 off += widths[k];
                               }
                             });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  const std::size_t n = parts.front().cols();
  std::vector<double> out;
  std::vector<std::size_t> sizes;
  for (const auto& p : parts) {
    require_defined(p, "concat_rows");
    if (p.cols() != n) throw ShapeError("concat_rows: column count mismatch");
    auto v = p.values();
    out.insert(out.end(), v.begin(), v.end());
    sizes.push_back(v.size());
  }
  const std::size_t m = out.size() / std::max<std::size_t>(n, 1);
  return detail::make_result({m, n}, std::move(out), parts, [sizes](const detail::Node& self) {
    std::size_t off = 0;
    for (std::size_t k = 0; k < sizes.size(); ++k) {
      if (auto* g = detail::grad_of(self, k))
        for (std::size_t i = 0; i < sizes[k]; ++i) (*g)[i] += self.grad[off + i];
      off += sizes[k];
    }
  });
}

Tensor slice_row(const Tensor& a, std::size_t r) {
  require_defined(a, "slice_row");
  if (r >= a.rows()) throw ShapeError("slice_row: row " + std::to_string(r) + " out of range");
  const std::size_t n = a.cols();
  return detail::make_result({1, n}, a.row_values(r), {a}, [r, n](const detail::Node& self) {
    if (auto* g = detail::grad_of(self, 0))
      for (std::size_t j = 0; j < n; ++j) (*g)[r * n + j] += self.grad[j];
  });
}

Tensor gather_rows(const Tensor& table, std::span<const std::size_t> ids) {
  require_defined(table, "gather_rows");
  const std::size_t n = table.cols();
  auto tv = table.values();
  std::vector<double> out(ids.size() * n);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= table.rows()) throw ShapeError("gather_rows: index out of range");
    std::copy_n(tv.data() + ids[i] * n, n, out.data() + i * n);
  }
  std::vector<std::size_t> idx(ids.begin(), ids.end());
  return detail::make_result({ids.size(), n}, std::move(out), {table},
                             [idx = std::move(idx), n](const detail::Node& self) {
                               if (auto* g = detail::grad_of(self, 0))
                                 for (std::size_t i = 0; i < idx.size(); ++i)
                                   for (std::size_t j = 0; j < n; ++j)
                                     (*g)[idx[i] * n + j] += self.grad[i * n + j];
                             });
}

Tensor mean_rows(const Tensor& a) {
  require_defined(a, "mean_rows");
  const std::size_t m = a.rows(), n = a.cols();
  if (m == 0) throw DomainError("mean_rows: no rows");
  auto av = a.values();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j] += av[i * n + j];
  for (auto& x : out) x /= static_cast<double>(m);
  return detail::make_result({1, n}, std::move(out), {a}, [m, n](const detail::Node& self) {
    if (auto* g = detail::grad_of(self, 0)) {
      const double inv = 1.0 / static_cast<double>(m);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) (*g)[i * n + j] += self.grad[j] * inv;
    }
  });
}

Tensor sum(const Tensor& a) {
  require_defined(a, "sum");
  double s = 0.0;
  for (double x : a.values()) s += x;
  return detail::make_result({1, 1}, {s}, {a}, [](const detail::Node& self) {
    if (auto* g = detail::grad_of(self, 0))
      for (auto& x : *g) x += self.grad[0];
  });
}

Tensor pick(const Tensor& a, std::size_t r, std::size_t c) {
  const double v = a.at(r, c);
  const std::size_t flat = r * a.cols() + c;
  return detail::make_result({1, 1}, {v}, {a}, [flat](const detail::Node& self) {
    if (auto* g = detail::grad_of(self, 0)) (*g)[flat] += self.grad[0];
  });
}

Tensor logsumexp(const Tensor& a) {
  require_defined(a, "logsumexp");
  auto av = a.values();
  if (av.empty()) throw DomainError("logsumexp: empty input");
  const double mx = *std::max_element(av.begin(), av.end());
  double s = 0.0;
  for (double x : av) s += std::exp(x - mx);
  const double out = mx + std::log(s);
  return detail::make_result({1, 1}, {out}, {a}, [](const detail::Node& self) {
    if (auto* g = detail::grad_of(self, 0)) {
      const auto& x = self.parents[0]->value;
      const double lse = self.value[0];
      for (std::size_t i = 0; i < x.size(); ++i) (*g)[i] += self.grad[0] * std::exp(x[i] - lse);
    }
  });
}

Tensor softmax_rows(const Tensor& a, double tau) {
  require_defined(a, "softmax_rows");
  if (!(tau > 0.0)) throw DomainError("softmax_rows: tau must be positive");
  const std::size_t m = a.rows(), n = a.cols();
  if (n == 0) throw DomainError("softmax_rows: empty rows");
  auto av = a.values();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    const double* x = av.data() + i * n;
    double* y = out.data() + i * n;
    const double mx = *std::max_element(x, x + n);
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += (y[j] = std::exp((x[j] - mx) / tau));
    for (std::size_t j = 0; j < n; ++j) y[j] /= s;
  }
  return detail::make_result(a.shape(), std::move(out), {a}, [m, n, tau](const detail::Node& self) {
    if (auto* g = detail::grad_of(self, 0)) {
      for (std::size_t i = 0; i < m; ++i) {
        const double* y = self.value.data() + i * n;
        const double* gy = self.grad.data() + i * n;
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) dot += gy[j] * y[j];
        for (std::size_t j = 0; j < n; ++j) (*g)[i * n + j] += y[j] * (gy[j] - dot) / tau;
      }
    }
  });
}

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace rpr

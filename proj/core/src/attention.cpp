#include "rpr/attention.hpp"

#include <cmath>
#include <string>

#include "rpr/errors.hpp"

namespace rpr {

bool MaskSpec::admits(std::size_t i) const {
  if (i >= length) return false;
  switch (kind) {
    case Kind::none:
      return true;
    case Kind::retro:
      return i <= focus;
    case Kind::prosp:
      return i >= focus;
  }
  return false;
}

std::size_t MaskSpec::admitted_count() const {
  switch (kind) {
    case Kind::none:
      return length;
    case Kind::retro:
      return focus < length ? focus + 1 : length;
    case Kind::prosp:
      return focus < length ? length - focus : 0;
  }
  return 0;
}

Tensor softmax_with_temperature(const Tensor& logits, double tau, const MaskSpec& mask) {
  if (!logits.defined() || logits.rows() != 1) {
    throw ShapeError("softmax_with_temperature: logits must be a single row");
  }
  const std::size_t n = logits.cols();
  if (n == 0) throw DomainError("softmax_with_temperature: n must be >= 1");
  if (!(tau > 0.0)) throw DomainError("softmax_with_temperature: tau must be positive");
  if (mask.length != n) {
    throw ShapeError("softmax_with_temperature: mask length " + std::to_string(mask.length) +
                     " != " + std::to_string(n));
  }
  if (mask.kind != MaskSpec::Kind::none && mask.focus >= n) {
    throw DomainError("softmax_with_temperature: focus index out of range");
  }
  if (mask.admitted_count() == 0) throw DomainError("softmax_with_temperature: empty admitted set");

  auto z = logits.values();
  double mx = -INFINITY;
  for (std::size_t i = 0; i < n; ++i)
    if (mask.admits(i) && z[i] > mx) mx = z[i];
  std::vector<double> w(n, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (mask.admits(i)) total += (w[i] = std::exp((z[i] - mx) / tau));
  }
  for (auto& x : w) x /= total;

  return detail::make_result({1, n}, std::move(w), {logits}, [tau](const detail::Node& self) {
    auto* g = detail::grad_of(self, 0);
    if (!g) return;
    const auto& y = self.value;
    double dot = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) dot += self.grad[i] * y[i];
    // Masked entries have y == 0 and therefore receive no gradient.
    for (std::size_t i = 0; i < y.size(); ++i) (*g)[i] += y[i] * (self.grad[i] - dot) / tau;
  });
}

AttentionOutput attention(const Tensor& query, const Tensor& keys, const Tensor& values,
                          double tau, const MaskSpec& mask) {
  if (!query.defined() || !keys.defined() || !values.defined()) {
    throw ShapeError("attention: undefined operand");
  }
  if (query.rows() != 1 || query.cols() != keys.cols() || keys.rows() != values.rows()) {
    throw ShapeError("attention: query 1x" + std::to_string(query.cols()) + ", keys " +
                     std::to_string(keys.rows()) + "x" + std::to_string(keys.cols()) +
                     ", values " + std::to_string(values.rows()) + "x" +
                     std::to_string(values.cols()));
  }
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(query.cols()));
  Tensor logits = scale(matmul(query, transpose(keys)), inv_sqrt_d);
  Tensor weights = softmax_with_temperature(logits, tau, mask);
  return {matmul(weights, values), weights};
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

}  // namespace rpr

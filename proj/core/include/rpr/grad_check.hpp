#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "rpr/tensor.hpp"

namespace rpr {

using NamedTensor = std::pair<std::string, Tensor>;

struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;  // at worst_index
  double numeric = 0.0;   // at worst_index
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;

  double max_rel_error() const;
  const GradCheckEntry* worst() const;
  bool passed(double tolerance) const { return max_rel_error() < tolerance; }
};

/// Compares backward() gradients of the scalar produced by `f` against central
/// differences (f(p+eps) - f(p-eps)) / 2eps for every element of every tensor
/// in `params`. Relative error uses max(|analytic|, |numeric|, 1e-8) as the
/// denominator. `f` must rebuild its graph on each call. The grads of `params`
/// are cleared before the analytic pass and hold the analytic gradient after
/// the call. Throws DomainError if eps <= 0 or f is non-finite.
GradCheckReport grad_check(const std::function<Tensor()>& f, std::vector<NamedTensor> params,
                           double eps);

}  // namespace rpr

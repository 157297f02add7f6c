#include "rpr/optimizer.hpp"

#include <cmath>

#include "rpr/errors.hpp"

namespace rpr {

void AdamWConfig::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw DomainError("learning rate must be positive");
  if (!(weight_decay >= 0.0)) throw DomainError("weight decay must be non-negative");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw DomainError("betas must lie in [0, 1)");
  }
  if (!(eps > 0.0)) throw DomainError("eps must be positive");
}

void optimizer_step(ModelParams& params, const AdamWConfig& config) {
  config.validate();
  bool any = false;
  for (const auto& [name, t] : params.tensors()) any = any || t.has_grad();
  if (!any) throw StateError("optimizer_step: no gradients; run backward first");

  const std::uint64_t step = params.step() + 1;
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
  for (const auto& [name, t] : params.tensors()) {
    Tensor tensor = t;
    auto& m = params.first_moment(name);
    auto& v = params.second_moment(name);
    auto values = tensor.mutable_values();
    const bool has_grad = tensor.has_grad();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = has_grad ? tensor.grad()[i] : 0.0;
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g;
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g * g;
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      values[i] -= config.lr * (config.weight_decay * values[i] + m_hat / (std::sqrt(v_hat) + config.eps));
    }
    tensor.clear_grad();
  }
  params.set_step(step);
}

}  // namespace rpr

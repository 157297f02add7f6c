#pragma once

#include "rpr/params.hpp"

namespace rpr {

struct AdamWConfig {
  double lr = 1e-3;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
};

/// One AdamW step with bias correction and decoupled weight decay:
///   p -= lr * (wd * p + m_hat / (sqrt(v_hat) + eps)).
/// Tensors the last backward pass never reached count as zero gradient.
/// Throws StateError when no tensor carries a gradient. Gradients are cleared
/// and the step counter advances.
void optimizer_step(ModelParams& params, const AdamWConfig& config);

}  // namespace rpr

#pragma once

#include <cstddef>
#include <span>

#include "rpr/tensor.hpp"

namespace rpr {

/// Which key positions an attention call may look at.
///
/// retro(j) admits {0..j}; prosp(j) admits {j..n-1}. Both admit j itself, so
/// the admitted set is never empty for a valid focus.
struct MaskSpec {
  enum class Kind { none, retro, prosp };

  Kind kind = Kind::none;
  std::size_t focus = 0;
  std::size_t length = 0;

  static MaskSpec none(std::size_t length) { return {Kind::none, 0, length}; }
  static MaskSpec retro(std::size_t focus, std::size_t length) { return {Kind::retro, focus, length}; }
  static MaskSpec prosp(std::size_t focus, std::size_t length) { return {Kind::prosp, focus, length}; }

  bool admits(std::size_t i) const;
  std::size_t admitted_count() const;
};

struct AttentionOutput {
  Tensor context;  // 1 x d
  Tensor weights;  // 1 x n
};

/// Temperature softmax over the admitted positions of a 1 x n logit row;
/// masked positions get exactly zero. Masked entries never reach exp().
/// Throws DomainError for tau <= 0 or an empty admitted set, ShapeError when
/// the mask length differs from n.
Tensor softmax_with_temperature(const Tensor& logits, double tau, const MaskSpec& mask);

/// Scaled dot-product attention of one query row over n key/value rows:
/// logits_i = query . keys_i / sqrt(d), then softmax_with_temperature.
AttentionOutput attention(const Tensor& query, const Tensor& keys, const Tensor& values,
                          double tau, const MaskSpec& mask);

/// Index of the largest value; the lowest index wins ties.
std::size_t argmax(std::span<const double> values);

}  // namespace rpr

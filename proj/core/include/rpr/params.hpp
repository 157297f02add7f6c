#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rpr/grad_check.hpp"
#include "rpr/tensor.hpp"

namespace rpr {

/// Sizes that determine every parameter shape.
struct ModelConfig {
  std::size_t dim = 64;        // model width d
  std::size_t input_dim = 64;  // raw frame width d_in
  std::size_t vocab = 256;     // token ids
  std::size_t max_args = 8;    // coverage padding width N_max

  bool operator==(const ModelConfig&) const = default;
  void validate() const;
};

/// Name and shape of every learnable tensor for a configuration, in a fixed
/// order. Weight matrices map row vectors: x (1 x in) * W (in x out).
std::vector<std::pair<std::string, Shape>> parameter_layout(const ModelConfig& config);

/// All learnable tensors plus the optimizer's per-tensor moment buffers.
class ModelParams {
 public:
  ModelParams() = default;

  /// Weight matrices ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), embedding tables
  /// ~ U(-1, 1), biases zero. Deterministic for a given seed.
  static ModelParams initialize(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }

  bool contains(std::string_view name) const;
  /// Throws std::out_of_range naming the missing tensor.
  const Tensor& at(std::string_view name) const;
  Tensor& at(std::string_view name);

  const std::map<std::string, Tensor, std::less<>>& tensors() const { return tensors_; }
  std::vector<NamedTensor> named() const;

  std::vector<double>& first_moment(std::string_view name);
  std::vector<double>& second_moment(std::string_view name);
  const std::map<std::string, std::vector<double>, std::less<>>& first_moments() const { return m_; }
  const std::map<std::string, std::vector<double>, std::less<>>& second_moments() const { return v_; }

  std::uint64_t step() const { return step_; }
  void set_step(std::uint64_t s) { step_ = s; }

  void zero_grad();
  /// Deep copy: values, moments, step. Gradients are not copied.
  ModelParams clone() const;

  /// Builds params from explicit tensors. Every name in the layout must be
  /// present with the right shape and no others (ShapeError / FormatError).
  static ModelParams from_tensors(const ModelConfig& config,
                                  std::map<std::string, std::vector<double>, std::less<>> values,
                                  std::map<std::string, std::vector<double>, std::less<>> first,
                                  std::map<std::string, std::vector<double>, std::less<>> second,
                                  std::uint64_t step);

 private:
  ModelConfig config_;
  std::map<std::string, Tensor, std::less<>> tensors_;
  std::map<std::string, std::vector<double>, std::less<>> m_;
  std::map<std::string, std::vector<double>, std::less<>> v_;
  std::uint64_t step_ = 0;
};

/// Uniform double in [0, 1) from the top 53 bits of a 64-bit draw. Used
/// everywhere instead of std::uniform_real_distribution so results do not
/// depend on the standard library implementation.
template <typename Rng>
double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace rpr

#include "rpr/params.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "rpr/episode.hpp"
#include "rpr/errors.hpp"

namespace rpr {

void ModelConfig::validate() const {
  if (dim == 0) throw DomainError("model width d must be positive");
  if (input_dim == 0) throw DomainError("input width d_in must be positive");
  if (vocab == 0) throw DomainError("vocabulary must be non-empty");
  if (max_args == 0) throw DomainError("N_max must be positive");
}

std::vector<std::pair<std::string, Shape>> parameter_layout(const ModelConfig& c) {
  const std::size_t d = c.dim;
  return {
      {"answer.b", {1, d}},
      {"answer.w", {d, d}},
      {"coverage.b", {1, d}},
      {"coverage.w", {d + c.max_args, d}},
      {"embed.tag", {srl_tags().size(), d}},
      {"embed.token", {c.vocab, d}},
      {"frame.b", {1, d}},
      {"frame.w", {c.input_dim, d}},
      {"g.b", {1, d}},
      {"g.w", {2 * d, d}},
      {"gate.b", {1, 1}},
      {"gate.w", {2 * d, 1}},
      {"question.b", {1, d}},
      {"question.w", {d, d}},
      {"score.w", {d, d}},
      {"srl.b", {1, d}},
      {"srl.w", {d, d}},
      {"temporal.wk", {d, d}},
      {"temporal.wq", {d, d}},
      {"temporal.wv", {d, d}},
      {"update.bh", {1, d}},
      {"update.bz", {1, d}},
      {"update.wh", {2 * d, d}},
      {"update.wz", {2 * d, d}},
  };
}

ModelParams ModelParams::initialize(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  ModelParams p;
  p.config_ = config;
  std::mt19937_64 rng(seed);
  for (const auto& [name, shape] : parameter_layout(config)) {
    const std::size_t rows = shape[0], cols = shape[1];
    std::vector<double> values(rows * cols, 0.0);
    const bool is_bias = name.find(".b") != std::string::npos;
    if (!is_bias) {
      const bool is_table = name.rfind("embed.", 0) == 0;
      const double bound = is_table ? 1.0 : 1.0 / std::sqrt(static_cast<double>(rows));
      for (auto& x : values) x = bound * (2.0 * uniform01(rng) - 1.0);
    }
    p.tensors_.emplace(name, Tensor(rows, cols, std::move(values), true));
    p.m_.emplace(name, std::vector<double>(rows * cols, 0.0));
    p.v_.emplace(name, std::vector<double>(rows * cols, 0.0));
  }
  return p;
}

bool ModelParams::contains(std::string_view name) const { return tensors_.find(name) != tensors_.end(); }

const Tensor& ModelParams::at(std::string_view name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw std::out_of_range("no parameter named " + std::string(name));
  return it->second;
}

Tensor& ModelParams::at(std::string_view name) {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw std::out_of_range("no parameter named " + std::string(name));
  return it->second;
}

std::vector<NamedTensor> ModelParams::named() const {
  std::vector<NamedTensor> out;
  out.reserve(tensors_.size());
  for (const auto& [name, t] : tensors_) out.emplace_back(name, t);
  return out;
}

std::vector<double>& ModelParams::first_moment(std::string_view name) {
  auto it = m_.find(name);
  if (it == m_.end()) throw std::out_of_range("no moment buffer for " + std::string(name));
  return it->second;
}

std::vector<double>& ModelParams::second_moment(std::string_view name) {
  auto it = v_.find(name);
  if (it == v_.end()) throw std::out_of_range("no moment buffer for " + std::string(name));
  return it->second;
}

void ModelParams::zero_grad() {
  for (auto& [name, t] : tensors_) t.zero_grad();
}

ModelParams ModelParams::clone() const {
  ModelParams p;
  p.config_ = config_;
  for (const auto& [name, t] : tensors_) p.tensors_.emplace(name, t.clone());
  p.m_ = m_;
  p.v_ = v_;
  p.step_ = step_;
  return p;
}

ModelParams ModelParams::from_tensors(const ModelConfig& config,
                                      std::map<std::string, std::vector<double>, std::less<>> values,
                                      std::map<std::string, std::vector<double>, std::less<>> first,
                                      std::map<std::string, std::vector<double>, std::less<>> second,
                                      std::uint64_t step) {
  config.validate();
  const auto layout = parameter_layout(config);
  for (const auto& [name, unused] : values) {
    bool known = false;
    for (const auto& entry : layout) known = known || entry.first == name;
    if (!known) throw FormatError("unknown parameter tensor '" + name + "'");
  }
  ModelParams p;
  p.config_ = config;
  p.step_ = step;
  for (const auto& [name, shape] : layout) {
    const std::size_t n = shape[0] * shape[1];
    auto it = values.find(name);
    if (it == values.end()) throw FormatError("missing parameter tensor '" + name + "'");
    if (it->second.size() != n) {
      throw ShapeError("parameter '" + name + "' has " + std::to_string(it->second.size()) +
                       " values, expected " + std::to_string(n));
    }
    auto take = [&](auto& src, auto& dst) {
      auto m = src.find(name);
      std::vector<double> buf = m == src.end() ? std::vector<double>(n, 0.0) : std::move(m->second);
      if (buf.size() != n) throw ShapeError("moment buffer for '" + name + "' has wrong size");
      dst.emplace(name, std::move(buf));
    };
    take(first, p.m_);
    take(second, p.v_);
    p.tensors_.emplace(name, Tensor(shape[0], shape[1], std::move(it->second), true));
  }
  return p;
}

}  // namespace rpr

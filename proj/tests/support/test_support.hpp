#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "rpr/episode.hpp"
#include "rpr/params.hpp"
#include "rpr/reasoner.hpp"
#include "rpr/tensor.hpp"

namespace rpr::testing {

inline Tensor random_tensor(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double scale = 1.0,
                            bool requires_grad = false) {
  std::vector<double> v(rows * cols);
  for (auto& x : v) x = scale * (2.0 * uniform01(rng) - 1.0);
  return Tensor(rows, cols, std::move(v), requires_grad);
}

inline std::vector<double> values_of(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

/// Small hand-built episode: n frames of width d_in, three SRL arguments,
/// four single-token answers.
inline EpisodeRecord small_episode(std::uint64_t seed, std::size_t n = 7, std::size_t d_in = 8) {
  std::mt19937_64 rng(seed);
  EpisodeRecord r;
  r.id = "small-" + std::to_string(seed);
  r.frames.assign(n, std::vector<double>(d_in));
  for (auto& f : r.frames) {
    for (auto& x : f) x = 2.0 * uniform01(rng) - 1.0;
  }
  for (std::size_t i = 0; i < 6; ++i) r.question_tokens.push_back(rng() % 64);
  r.srl = {{"ARG0", 0, 1}, {"V", 2, 2}, {"ARG1", 3, 5}};
  for (std::size_t k = 0; k < 4; ++k) r.answers.push_back({{64 + rng() % 64}});
  r.label = rng() % 4;
  return r;
}

inline HyperParams small_hp(std::size_t steps = 3) {
  HyperParams hp;
  hp.dim = 8;
  hp.max_args = 4;
  hp.steps = steps;
  return hp;
}

inline ModelParams small_params(std::uint64_t seed, std::size_t d_in = 8) {
  return ModelParams::initialize({8, d_in, 128, 4}, seed);
}

/// Fresh scratch directory under the system temp path, removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("rpr-test-" + tag + "-" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace rpr::testing

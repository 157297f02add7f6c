#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rpr/episode.hpp"
#include "rpr/grad_check.hpp"
#include "rpr/params.hpp"
#include "rpr/reasoner.hpp"

namespace rpr::cli {

inline constexpr double kGradEps = 1e-6;
inline constexpr double kGradTolerance = 1e-4;

struct SuiteResult {
  std::string component;
  GradCheckReport report;
};

/// One component per differentiable primitive. Each contracts the op output
/// with fixed random weights so every output element reaches the scalar.
std::vector<SuiteResult> op_suite(std::uint64_t seed);

/// Small end-to-end problem: n = 7 frames, N = 3 arguments, d = 8, T = 3.
struct EndToEndProblem {
  EpisodeRecord episode;
  ModelParams params;
  HyperParams hp;
};

EndToEndProblem end_to_end_problem(std::uint64_t seed);

/// loss_multi of the problem with the discrete controls (initial focus,
/// branches, focus moves) frozen at their forward-pass values. answer.b is not
/// checked: it shifts every option's score equally, so the loss does not depend
/// on it and the finite difference only sees rounding.
std::vector<SuiteResult> end_to_end_suite(std::uint64_t seed);

}  // namespace rpr::cli

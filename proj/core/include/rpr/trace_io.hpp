#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rpr/episode.hpp"
#include "rpr/reasoner.hpp"

namespace rpr {

struct EpisodeTrace {
  std::string episode_id;
  std::vector<StepTrace> steps;
  std::vector<std::string> srl_tags;
  std::size_t prediction = 0;
  std::size_t label = 0;
  std::optional<Direction> planned_direction;  // first planted hop, when known
};

/// JSON Lines: one line per step, then one summary line per episode.
/// Episodes are ordered by id and steps by step number. IoError when the path
/// cannot be written.
void write_trace(std::vector<EpisodeTrace> traces, const std::filesystem::path& path);

/// Step line fields: episode, step, srl_weights, coverage, p, branch,
/// focus_before, focus_after, frame_weights (weights of the chosen branch).
std::string step_to_json(const std::string& episode_id, const StepTrace& step);
std::string summary_to_json(const EpisodeTrace& trace);

/// Plain-text hop summary, one line per step, for example
/// "step 2: retro, frame 4->1, top arg ARG2 (0.81)".
std::string hop_summary(const EpisodeTrace& trace);

}  // namespace rpr

#include "rpr/trace_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "rpr/attention.hpp"
#include "rpr/errors.hpp"

namespace rpr {

using json = nlohmann::json;

std::string step_to_json(const std::string& episode_id, const StepTrace& s) {
  json j = {
      {"episode", episode_id},
      {"step", s.step},
      {"srl_weights", s.srl_weights},
      {"coverage", s.coverage},
      {"p", s.gate_prob},
      {"branch", std::string(to_string(s.branch))},
      {"focus_before", s.focus_before},
      {"focus_after", s.focus_after},
      {"frame_weights", s.chosen_weights()},
  };
  return j.dump();
}

std::string summary_to_json(const EpisodeTrace& t) {
  json j = {
      {"episode", t.episode_id},
      {"summary", true},
      {"steps", t.steps.size()},
      {"prediction", t.prediction},
      {"label", t.label},
      {"correct", t.prediction == t.label},
  };
  if (t.planned_direction) {
    j["planned_direction"] = std::string(to_string(*t.planned_direction));
    if (!t.steps.empty()) j["direction_match"] = t.steps.front().branch == *t.planned_direction;
  }
  return j.dump();
}

std::string hop_summary(const EpisodeTrace& t) {
  std::string out;
  for (const auto& s : t.steps) {
    const std::size_t top = s.srl_weights.empty() ? 0 : argmax(s.srl_weights);
    const std::string tag = top < t.srl_tags.size() ? t.srl_tags[top] : "#" + std::to_string(top);
    char buf[160];
    std::snprintf(buf, sizeof buf, "step %zu: %s, frame %zu->%zu, top arg %s (%.2f)\n", s.step,
                  std::string(to_string(s.branch)).c_str(), s.focus_before, s.focus_after, tag.c_str(),
                  s.srl_weights.empty() ? 0.0 : s.srl_weights[top]);
    out += buf;
  }
  return out;
}

void write_trace(std::vector<EpisodeTrace> traces, const std::filesystem::path& path) {
  std::stable_sort(traces.begin(), traces.end(),
                   [](const EpisodeTrace& a, const EpisodeTrace& b) { return a.episode_id < b.episode_id; });
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write trace file " + path.string());
  for (auto& t : traces) {
    std::stable_sort(t.steps.begin(), t.steps.end(),
                     [](const StepTrace& a, const StepTrace& b) { return a.step < b.step; });
    for (const auto& s : t.steps) out << step_to_json(t.episode_id, s) << '\n';
    out << summary_to_json(t) << '\n';
  }
  out.flush();
  if (!out) throw IoError("write error in " + path.string());
}

}  // namespace rpr

#include "rpr/episode.hpp"

#include <algorithm>

namespace rpr {

std::string_view to_string(Direction d) { return d == Direction::retro ? "retro" : "prosp"; }

std::optional<Direction> parse_direction(std::string_view s) {
  if (s == "retro") return Direction::retro;
  if (s == "prosp") return Direction::prosp;
  return std::nullopt;
}

const std::vector<std::string>& srl_tags() {
  static const std::vector<std::string> tags{
      "O",        "ARG0",     "ARG1",     "ARG2",     "ARG3",     "ARG4",     "ARG5",
      "V",        "ARGM-TMP", "ARGM-LOC", "ARGM-MNR", "ARGM-CAU", "ARGM-DIR", "ARGM-ADV",
      "ARGM-PRP", "ARGM-NEG", "ARGM-MOD", "ARGM-EXT", "ARGM-DIS", "ARGM-PRD",
  };
  return tags;
}

std::optional<std::size_t> srl_tag_index(std::string_view tag) {
  const auto& tags = srl_tags();
  auto it = std::find(tags.begin(), tags.end(), tag);
  if (it == tags.end()) return std::nullopt;
  return static_cast<std::size_t>(it - tags.begin());
}

}  // namespace rpr

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rpr {

enum class Direction { retro, prosp };

std::string_view to_string(Direction d);
/// Parses "retro" / "prosp". Returns nullopt for anything else.
std::optional<Direction> parse_direction(std::string_view s);

struct Hop {
  Direction direction = Direction::prosp;
  std::size_t target = 0;

  bool operator==(const Hop&) const = default;
};

/// Ground-truth trajectory of a synthetic episode.
struct HopPlan {
  std::size_t start_frame = 0;
  std::vector<Hop> hops;
  std::size_t evidence_frame = 0;

  bool operator==(const HopPlan&) const = default;
};

/// One SRL argument of the question: a tag and an inclusive token span.
struct SrlArgument {
  std::string tag;
  std::size_t start = 0;
  std::size_t end = 0;

  bool operator==(const SrlArgument&) const = default;
};

struct AnswerOption {
  std::vector<std::size_t> tokens;

  bool operator==(const AnswerOption&) const = default;
};

/// Vectors produced by an external encoder, used instead of the toy text
/// encoders. Widths are the model width d.
struct PrecomputedEmbeddings {
  std::vector<double> question;
  std::vector<std::vector<double>> srl;
  std::vector<std::vector<double>> answers;

  bool operator==(const PrecomputedEmbeddings&) const = default;
};

struct EpisodeRecord {
  std::string id;
  std::vector<std::vector<double>> frames;  // n x d_in, temporal order
  std::vector<std::size_t> question_tokens;
  std::vector<SrlArgument> srl;
  std::vector<AnswerOption> answers;
  std::size_t label = 0;
  std::optional<HopPlan> plan;
  std::optional<PrecomputedEmbeddings> embeddings;

  bool operator==(const EpisodeRecord&) const = default;
};

/// Known SRL tags. Index 0 ("O") is the null tag and contributes no tag
/// embedding.
const std::vector<std::string>& srl_tags();
std::optional<std::size_t> srl_tag_index(std::string_view tag);
inline constexpr std::size_t kNullTag = 0;

}  // namespace rpr

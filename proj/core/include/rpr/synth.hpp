#pragma once

// Synthetic episodes with a planted multi-hop chain.
//
// Every frame is the sum of scaled unit vectors from fixed orthonormal bases,
// one per block of the raw frame vector, padded with zeros up to d_in:
//
//   key      which event this is (16 ids)
//   payload  the token an answer refers to (16 ids)
//   cue      optional direction marker on chain targets and their twins
//
// The question anchors the start frame (ARGM-TMP) and names, for hop i, the
// key of the hop-i target (ARG0, ARG1, ...). The answer is the payload of the
// last target; the distractors are payloads of frames off the chain, so a
// probe that reads any single non-evidence frame is at chance.
//
// With twins enabled, each key named by a hop argument is carried by two
// frames: the target, and a twin on the opposite side of the hop's origin.
// Only a step that starts from the previous target and looks in the planted
// direction isolates the right one. Twins and cues are off in the standard
// task: with either on, multi-step models stall at chance for many epochs.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rpr/episode.hpp"

namespace rpr {

struct SynthSpec {
  std::size_t frames = 10;     // n
  std::size_t args = 4;        // N
  std::size_t hops = 2;
  std::size_t input_dim = 64;  // d_in
  std::size_t options = 4;     // M
  bool twins = false;
  bool cues = false;

  bool operator==(const SynthSpec&) const = default;
  /// Throws DomainError for specs no episode can satisfy.
  void validate() const;
};

namespace synth {

inline constexpr std::size_t kKeys = 16;
inline constexpr std::size_t kPayloads = 16;

inline constexpr std::size_t kKeyOffset = 0;
inline constexpr std::size_t kPayloadOffset = 16;
inline constexpr std::size_t kCueOffset = 32;  // [retro, prosp]
inline constexpr std::size_t kMinInputDim = 34;
inline constexpr double kAmplitude = 3.0;

// Token id regions. All ids stay below 192, inside the default vocabulary.
inline constexpr std::size_t kKeyToken = 16;
inline constexpr std::size_t kAnchorToken = 40;
inline constexpr std::size_t kPayloadToken = 64;
inline constexpr std::size_t kVerbToken = 96;
inline constexpr std::size_t kVerbs = 8;
inline constexpr std::size_t kFillerToken = 128;
inline constexpr std::size_t kFillers = 2;
inline constexpr std::size_t kTokenLimit = kFillerToken + kFillers;

/// Contents recovered from a raw frame vector by projecting each block onto
/// its basis.
struct FrameContent {
  std::size_t key = 0;
  std::size_t payload = 0;
  std::optional<Direction> cue;
};

FrameContent decode_frame(const std::vector<double>& frame);

}  // namespace synth

/// Deterministic in (seed, spec). id defaults to "synth-<seed>".
EpisodeRecord generate_episode(std::uint64_t seed, const SynthSpec& spec, std::string id = {});

/// Replays the plan over the decoded frame contents and question, returning the
/// label of the option carrying the evidence payload. Throws DomainError when
/// the record has no plan and IntegrityError when contents and plan disagree.
std::size_t oracle_answer(const EpisodeRecord& record);

/// Predicts the option whose token equals the payload decoded from one frame,
/// or a seeded uniform guess when no option matches.
std::size_t probe_answer(const EpisodeRecord& record, std::size_t frame, std::uint64_t seed);

struct SynthSplit {
  std::vector<EpisodeRecord> train;
  std::vector<EpisodeRecord> dev;
  std::vector<EpisodeRecord> test;
};

/// Generates count episodes and partitions them 80/10/10 by a seeded hash of
/// the episode id. dev and test each get max(1, floor(count / 10)) episodes.
/// Throws DomainError when count < 3.
SynthSplit make_split(std::size_t count, std::uint64_t seed, const SynthSpec& spec);

}  // namespace rpr

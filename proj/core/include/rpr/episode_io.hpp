#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "rpr/episode.hpp"

namespace rpr {

// One JSON object per line:
//   {"id": str, "frames": [[num...]...],
//    "question": {"tokens": [int...], "srl": [{"tag": str, "span": [start, end]}...]},
//    "answers": [{"tokens": [int...]}...], "label": int,
//    "plan": {"start_frame": int, "hops": [{"direction": "retro"|"prosp", "target": int}...],
//             "evidence_frame": int},                                     (optional)
//    "embeddings": {"question": [num...], "srl": [[num...]...],
//                   "answers": [[num...]...]}}                            (optional)
// Spans are inclusive. Unknown keys are rejected. Blank lines are skipped.

/// Serializes one record as a single line without a trailing newline.
std::string episode_to_json(const EpisodeRecord& record);

/// Parses one line. Errors carry the line number and the offending field:
/// ParseError for invalid JSON, SchemaError for schema violations.
EpisodeRecord episode_from_json(std::string_view line, std::size_t line_number = 1);

/// IoError when the file cannot be opened.
std::vector<EpisodeRecord> read_episodes(const std::filesystem::path& path);

/// IoError when the file cannot be written.
void write_episodes(const std::vector<EpisodeRecord>& records, const std::filesystem::path& path);

}  // namespace rpr

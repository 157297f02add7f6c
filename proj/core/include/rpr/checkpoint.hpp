#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rpr/params.hpp"
#include "rpr/reasoner.hpp"

namespace rpr {

inline constexpr int kCheckpointFormatVersion = 1;

struct Checkpoint {
  ModelParams params;
  HyperParams hp;
  std::uint64_t seed = 0;
};

/// Writes JSON with every tensor and moment buffer as base64 of little-endian
/// IEEE-754 doubles, then renames into place so readers never see a partial
/// file. IoError on failure.
void write_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);

/// IoError (unreadable), CorruptFileError (truncated or bad base64),
/// VersionError, ShapeError (decoded length or shape disagrees), FormatError
/// (unknown or missing tensor).
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// As above, and throws ShapeError unless the stored model configuration
/// equals expected.
Checkpoint read_checkpoint(const std::filesystem::path& path, const ModelConfig& expected);

std::string encode_doubles(const std::vector<double>& values);
/// CorruptFileError on malformed input or a byte count that is not a multiple of 8.
std::vector<double> decode_doubles(const std::string& text);

}  // namespace rpr

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace rpr {

/// Settings a configuration file may provide. Absent keys stay empty so the
/// caller can layer flags over file values over defaults.
struct ConfigValues {
  std::optional<std::uint64_t> seed;
  // reasoning
  std::optional<std::size_t> steps;
  std::optional<double> tau;
  std::optional<double> srl_tau;
  std::optional<double> alpha;
  std::optional<std::string> chi_mode;  // "argument_count" | "unit"
  std::optional<bool> use_coverage;
  std::optional<std::size_t> max_frames;
  std::optional<std::size_t> max_args;
  // model
  std::optional<std::size_t> dim;
  std::optional<std::size_t> input_dim;
  std::optional<std::size_t> vocab;
  // training and evaluation
  std::optional<double> lr;
  std::optional<double> weight_decay;
  std::optional<std::size_t> batch;
  std::optional<std::size_t> epochs;
  std::optional<std::string> setting;  // "quarter" | "half"
  std::optional<bool> binary_aux;
  std::optional<bool> gate_surrogate;
  std::optional<std::size_t> jobs;
  // synthetic data
  std::optional<std::size_t> count;
  std::optional<std::size_t> frames;
  std::optional<std::size_t> args;
  std::optional<std::size_t> hops;
  std::optional<std::size_t> options;
  std::optional<bool> twins;
  std::optional<bool> cues;
};

/// Reads a flat JSON object whose keys are the field names above. Unknown
/// keys and wrongly typed values raise SchemaError; invalid JSON raises
/// ParseError; an unreadable file raises IoError.
ConfigValues read_config(const std::filesystem::path& path);
ConfigValues parse_config(const std::string& text);

}  // namespace rpr

#include "rpr/config_io.hpp"

#include <fstream>
#include <type_traits>
#include <sstream>

#include <json.hpp>

#include "rpr/errors.hpp"

namespace rpr {

static_assert(std::is_same_v<std::uint64_t, std::size_t>, "seed shares the size_t reader");

namespace {

using json = nlohmann::json;

void take(const json& v, const std::string& key, std::optional<std::size_t>& out) {
  if (!v.is_number_unsigned()) throw SchemaError("config: '" + key + "' must be a non-negative integer");
  out = v.get<std::size_t>();
}

void take(const json& v, const std::string& key, std::optional<double>& out) {
  if (!v.is_number()) throw SchemaError("config: '" + key + "' must be a number");
  out = v.get<double>();
}

void take(const json& v, const std::string& key, std::optional<bool>& out) {
  if (!v.is_boolean()) throw SchemaError("config: '" + key + "' must be true or false");
  out = v.get<bool>();
}

void take(const json& v, const std::string& key, std::optional<std::string>& out) {
  if (!v.is_string()) throw SchemaError("config: '" + key + "' must be a string");
  out = v.get<std::string>();
}

}  // namespace

ConfigValues parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config: malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw SchemaError("config: expected a JSON object");
  ConfigValues c;
  for (const auto& [key, v] : j.items()) {
#define RPR_FIELD(name)       \
  if (key == #name) {         \
    take(v, key, c.name);     \
    continue;                 \
  }
    RPR_FIELD(seed)
    RPR_FIELD(steps)
    RPR_FIELD(tau)
    RPR_FIELD(srl_tau)
    RPR_FIELD(alpha)
    RPR_FIELD(chi_mode)
    RPR_FIELD(use_coverage)
    RPR_FIELD(max_frames)
    RPR_FIELD(max_args)
    RPR_FIELD(dim)
    RPR_FIELD(input_dim)
    RPR_FIELD(vocab)
    RPR_FIELD(lr)
    RPR_FIELD(weight_decay)
    RPR_FIELD(batch)
    RPR_FIELD(epochs)
    RPR_FIELD(setting)
    RPR_FIELD(binary_aux)
    RPR_FIELD(gate_surrogate)
    RPR_FIELD(jobs)
    RPR_FIELD(count)
    RPR_FIELD(frames)
    RPR_FIELD(args)
    RPR_FIELD(hops)
    RPR_FIELD(options)
    RPR_FIELD(twins)
    RPR_FIELD(cues)
#undef RPR_FIELD
    throw SchemaError("config: unknown key '" + key + "'");
  }
  return c;
}

ConfigValues read_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace rpr

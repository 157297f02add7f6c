#include "rpr/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>
#include <openssl/evp.h>

#include "rpr/errors.hpp"

namespace rpr {

namespace {

using json = nlohmann::json;
using Buffers = std::map<std::string, std::vector<double>, std::less<>>;

std::string chi_name(ChiMode m) { return m == ChiMode::unit ? "unit" : "argument_count"; }

json hp_to_json(const HyperParams& hp) {
  return {
      {"steps", hp.steps},         {"tau", hp.tau},
      {"srl_tau", hp.srl_tau},     {"alpha", hp.alpha},
      {"chi_mode", chi_name(hp.chi_mode)},
      {"dim", hp.dim},             {"max_frames", hp.max_frames},
      {"max_args", hp.max_args},   {"use_coverage", hp.use_coverage},
  };
}

HyperParams hp_from_json(const json& j) {
  HyperParams hp;
  hp.steps = j.at("steps").get<std::size_t>();
  hp.tau = j.at("tau").get<double>();
  hp.srl_tau = j.at("srl_tau").get<double>();
  hp.alpha = j.at("alpha").get<double>();
  const auto chi = j.at("chi_mode").get<std::string>();
  if (chi != "unit" && chi != "argument_count") throw SchemaError("checkpoint: unknown chi_mode " + chi);
  hp.chi_mode = chi == "unit" ? ChiMode::unit : ChiMode::argument_count;
  hp.dim = j.at("dim").get<std::size_t>();
  hp.max_frames = j.at("max_frames").get<std::size_t>();
  hp.max_args = j.at("max_args").get<std::size_t>();
  hp.use_coverage = j.at("use_coverage").get<bool>();
  return hp;
}

json buffers_to_json(const Buffers& buffers) {
  json out = json::object();
  for (const auto& [name, values] : buffers) out[name] = encode_doubles(values);
  return out;
}

Buffers buffers_from_json(const json& j) {
  Buffers out;
  for (const auto& [name, text] : j.items()) out.emplace(name, decode_doubles(text.get<std::string>()));
  return out;
}

}  // namespace

std::string encode_doubles(const std::vector<double>& values) {
  std::string bytes(values.size() * 8, '\0');
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(values[i]);
    for (std::size_t b = 0; b < 8; ++b) bytes[i * 8 + b] = static_cast<char>((bits >> (8 * b)) & 0xff);
  }
  std::string out(4 * ((bytes.size() + 2) / 3) + 1, '\0');
  const int len = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                  reinterpret_cast<const unsigned char*>(bytes.data()), static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(len));
  return out;
}

std::vector<double> decode_doubles(const std::string& text) {
  if (text.size() % 4 != 0) throw CorruptFileError("base64 length is not a multiple of 4");
  std::string bytes(text.size() / 4 * 3 + 1, '\0');
  const int len = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(bytes.data()),
                                  reinterpret_cast<const unsigned char*>(text.data()), static_cast<int>(text.size()));
  if (len < 0) throw CorruptFileError("malformed base64");
  std::size_t size = static_cast<std::size_t>(len);
  // EVP_DecodeBlock keeps the zero bytes that stand in for '=' padding.
  for (std::size_t i = text.size(); i > 0 && text[i - 1] == '='; --i) --size;
  if (size % 8 != 0) throw CorruptFileError("decoded byte count is not a multiple of 8");
  std::vector<double> out(size / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t bits = 0;
    for (std::size_t b = 0; b < 8; ++b) {
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i * 8 + b])) << (8 * b);
    }
    out[i] = std::bit_cast<double>(bits);
  }
  return out;
}

void write_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  const ModelParams& p = ck.params;
  const auto& cfg = p.config();
  json tensors = json::object();
  for (const auto& [name, t] : p.tensors()) {
    tensors[name] = {{"shape", {t.rows(), t.cols()}},
                     {"data", encode_doubles({t.values().begin(), t.values().end()})}};
  }
  json j = {
      {"format_version", kCheckpointFormatVersion},
      {"model", {{"dim", cfg.dim}, {"input_dim", cfg.input_dim}, {"vocab", cfg.vocab}, {"max_args", cfg.max_args}}},
      {"hyperparams", hp_to_json(ck.hp)},
      {"seed", ck.seed},
      {"step", p.step()},
      {"tensors", tensors},
      {"moments", {{"first", buffers_to_json(p.first_moments())}, {"second", buffers_to_json(p.second_moments())}}},
  };

  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint " + tmp.string());
    out << j.dump() << '\n';
    out.flush();
    if (!out) throw IoError("write error in " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move checkpoint into place at " + path.string());
  }
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();

  json j;
  try {
    j = json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw CorruptFileError("checkpoint " + path.string() + " is truncated or not JSON: " + e.what());
  }
  try {
    const int version = j.at("format_version").get<int>();
    if (version != kCheckpointFormatVersion) {
      throw VersionError("checkpoint format version " + std::to_string(version) + " is not supported (expected " +
                         std::to_string(kCheckpointFormatVersion) + ")");
    }
    const json& m = j.at("model");
    ModelConfig cfg{m.at("dim").get<std::size_t>(), m.at("input_dim").get<std::size_t>(),
                    m.at("vocab").get<std::size_t>(), m.at("max_args").get<std::size_t>()};

    Buffers values;
    for (const auto& [name, t] : j.at("tensors").items()) {
      auto data = decode_doubles(t.at("data").get<std::string>());
      const auto shape = t.at("shape").get<std::vector<std::size_t>>();
      if (shape.size() != 2 || shape[0] * shape[1] != data.size()) {
        throw ShapeError("checkpoint tensor '" + name + "': decoded length does not match its shape");
      }
      for (const auto& [lname, lshape] : parameter_layout(cfg)) {
        if (lname == name && lshape != shape) throw ShapeError("checkpoint tensor '" + name + "' has the wrong shape");
      }
      values.emplace(name, std::move(data));
    }
    const json& moments = j.at("moments");
    Checkpoint ck;
    ck.params = ModelParams::from_tensors(cfg, std::move(values), buffers_from_json(moments.at("first")),
                                          buffers_from_json(moments.at("second")), j.at("step").get<std::uint64_t>());
    ck.hp = hp_from_json(j.at("hyperparams"));
    ck.seed = j.at("seed").get<std::uint64_t>();
    return ck;
  } catch (const json::exception& e) {
    throw SchemaError("checkpoint " + path.string() + ": " + e.what());
  }
}

Checkpoint read_checkpoint(const std::filesystem::path& path, const ModelConfig& expected) {
  Checkpoint ck = read_checkpoint(path);
  const auto& got = ck.params.config();
  if (!(got == expected)) {
    throw ShapeError("checkpoint was saved with d=" + std::to_string(got.dim) + ", d_in=" +
                     std::to_string(got.input_dim) + ", vocab=" + std::to_string(got.vocab) + ", N_max=" +
                     std::to_string(got.max_args) + "; requested d=" + std::to_string(expected.dim) + ", d_in=" +
                     std::to_string(expected.input_dim) + ", vocab=" + std::to_string(expected.vocab) +
                     ", N_max=" + std::to_string(expected.max_args));
  }
  return ck;
}

}  // namespace rpr

#include "rpr/episode_io.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include <json.hpp>

#include "rpr/errors.hpp"

namespace rpr {

namespace {

using json = nlohmann::json;

class Reader {
 public:
  explicit Reader(std::size_t line) : line_(line) {}

  [[noreturn]] void fail(const std::string& field, const std::string& what) const {
    throw SchemaError("line " + std::to_string(line_) + ": field '" + field + "': " + what);
  }

  void only_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) const {
    if (!obj.is_object()) fail(where, "expected an object");
    for (const auto& [key, unused] : obj.items()) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || key == a;
      if (!ok) fail(where.empty() ? key : where + "." + key, "unknown field");
    }
  }

  const json& require(const json& obj, const char* key, const std::string& field) const {
    auto it = obj.find(key);
    if (it == obj.end()) fail(field, "missing");
    return *it;
  }

  std::size_t index(const json& v, const std::string& field) const {
    if (!v.is_number_unsigned()) fail(field, "expected a non-negative integer");
    return v.get<std::size_t>();
  }

  double number(const json& v, const std::string& field) const {
    if (!v.is_number()) fail(field, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(field, "not finite");
    return x;
  }

  std::vector<std::size_t> indices(const json& v, const std::string& field) const {
    if (!v.is_array()) fail(field, "expected an array of integers");
    std::vector<std::size_t> out;
    out.reserve(v.size());
    for (const auto& x : v) out.push_back(index(x, field));
    return out;
  }

  std::vector<double> numbers(const json& v, const std::string& field) const {
    if (!v.is_array()) fail(field, "expected an array of numbers");
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& x : v) out.push_back(number(x, field));
    return out;
  }

  std::vector<std::vector<double>> matrix(const json& v, const std::string& field, bool allow_empty) const {
    if (!v.is_array()) fail(field, "expected an array of rows");
    if (!allow_empty && v.empty()) fail(field, "empty");
    std::vector<std::vector<double>> out;
    for (const auto& row : v) {
      out.push_back(numbers(row, field));
      if (out.back().empty()) fail(field, "empty row");
      if (out.back().size() != out.front().size()) fail(field, "rows differ in length");
    }
    return out;
  }

 private:
  std::size_t line_;
};

json plan_to_json(const HopPlan& plan) {
  json hops = json::array();
  for (const auto& h : plan.hops) hops.push_back({{"direction", std::string(to_string(h.direction))}, {"target", h.target}});
  return {{"start_frame", plan.start_frame}, {"hops", hops}, {"evidence_frame", plan.evidence_frame}};
}

}  // namespace

std::string episode_to_json(const EpisodeRecord& r) {
  json srl = json::array();
  for (const auto& a : r.srl) srl.push_back({{"tag", a.tag}, {"span", {a.start, a.end}}});
  json answers = json::array();
  for (const auto& a : r.answers) answers.push_back({{"tokens", a.tokens}});
  json j = {
      {"id", r.id},
      {"frames", r.frames},
      {"question", {{"tokens", r.question_tokens}, {"srl", srl}}},
      {"answers", answers},
      {"label", r.label},
  };
  if (r.plan) j["plan"] = plan_to_json(*r.plan);
  if (r.embeddings) {
    j["embeddings"] = {
        {"question", r.embeddings->question},
        {"srl", r.embeddings->srl},
        {"answers", r.embeddings->answers},
    };
  }
  return j.dump();
}

EpisodeRecord episode_from_json(std::string_view line, std::size_t line_number) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError("line " + std::to_string(line_number) + ": malformed JSON: " + e.what());
  }
  Reader rd(line_number);
  rd.only_keys(j, "", {"id", "frames", "question", "answers", "label", "plan", "embeddings"});

  EpisodeRecord r;
  const json& id = rd.require(j, "id", "id");
  if (!id.is_string()) rd.fail("id", "expected a string");
  r.id = id.get<std::string>();
  r.frames = rd.matrix(rd.require(j, "frames", "frames"), "frames", false);

  const json& q = rd.require(j, "question", "question");
  rd.only_keys(q, "question", {"tokens", "srl"});
  r.question_tokens = rd.indices(rd.require(q, "tokens", "question.tokens"), "question.tokens");
  const json& srl = rd.require(q, "srl", "question.srl");
  if (!srl.is_array()) rd.fail("question.srl", "expected an array");
  for (const auto& a : srl) {
    rd.only_keys(a, "question.srl", {"tag", "span"});
    const json& tag = rd.require(a, "tag", "question.srl.tag");
    if (!tag.is_string()) rd.fail("question.srl.tag", "expected a string");
    if (!srl_tag_index(tag.get<std::string>())) rd.fail("question.srl.tag", "unknown tag " + tag.dump());
    const json& span = rd.require(a, "span", "question.srl.span");
    if (!span.is_array() || span.size() != 2) rd.fail("question.srl.span", "expected [start, end]");
    SrlArgument arg{tag.get<std::string>(), rd.index(span[0], "question.srl.span"),
                    rd.index(span[1], "question.srl.span")};
    if (arg.start > arg.end) rd.fail("question.srl.span", "start after end");
    if (arg.end >= r.question_tokens.size()) rd.fail("question.srl.span", "outside the question tokens");
    r.srl.push_back(std::move(arg));
  }

  const json& answers = rd.require(j, "answers", "answers");
  if (!answers.is_array() || answers.empty()) rd.fail("answers", "expected a non-empty array");
  for (const auto& a : answers) {
    rd.only_keys(a, "answers", {"tokens"});
    r.answers.push_back({rd.indices(rd.require(a, "tokens", "answers.tokens"), "answers.tokens")});
  }
  r.label = rd.index(rd.require(j, "label", "label"), "label");
  if (r.label >= r.answers.size()) {
    rd.fail("label", std::to_string(r.label) + " is not below the answer count " + std::to_string(r.answers.size()));
  }

  if (auto it = j.find("plan"); it != j.end()) {
    const json& p = *it;
    rd.only_keys(p, "plan", {"start_frame", "hops", "evidence_frame"});
    HopPlan plan;
    const std::size_t n = r.frames.size();
    plan.start_frame = rd.index(rd.require(p, "start_frame", "plan.start_frame"), "plan.start_frame");
    if (plan.start_frame >= n) rd.fail("plan.start_frame", "outside the frames");
    const json& hops = rd.require(p, "hops", "plan.hops");
    if (!hops.is_array()) rd.fail("plan.hops", "expected an array");
    std::size_t cur = plan.start_frame;
    for (const auto& h : hops) {
      rd.only_keys(h, "plan.hops", {"direction", "target"});
      const json& dir = rd.require(h, "direction", "plan.hops.direction");
      auto parsed = dir.is_string() ? parse_direction(dir.get<std::string>()) : std::nullopt;
      if (!parsed) rd.fail("plan.hops.direction", "expected \"retro\" or \"prosp\"");
      Hop hop{*parsed, rd.index(rd.require(h, "target", "plan.hops.target"), "plan.hops.target")};
      if (hop.target >= n) rd.fail("plan.hops.target", "outside the frames");
      if (hop.direction == Direction::retro ? hop.target > cur : hop.target < cur) {
        rd.fail("plan.hops.target", "inconsistent with direction " + std::string(to_string(hop.direction)));
      }
      cur = hop.target;
      plan.hops.push_back(hop);
    }
    plan.evidence_frame = rd.index(rd.require(p, "evidence_frame", "plan.evidence_frame"), "plan.evidence_frame");
    if (plan.evidence_frame != cur) rd.fail("plan.evidence_frame", "must equal the last hop target");
    r.plan = plan;
  }

  if (auto it = j.find("embeddings"); it != j.end()) {
    const json& e = *it;
    rd.only_keys(e, "embeddings", {"question", "srl", "answers"});
    PrecomputedEmbeddings emb;
    emb.question = rd.numbers(rd.require(e, "question", "embeddings.question"), "embeddings.question");
    emb.srl = rd.matrix(rd.require(e, "srl", "embeddings.srl"), "embeddings.srl", false);
    if (auto a = e.find("answers"); a != e.end()) emb.answers = rd.matrix(*a, "embeddings.answers", true);
    if (!emb.answers.empty() && emb.answers.size() != r.answers.size()) {
      rd.fail("embeddings.answers", "one row per answer option required");
    }
    r.embeddings = std::move(emb);
  }
  return r;
}

std::vector<EpisodeRecord> read_episodes(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open episode file " + path.string());
  std::vector<EpisodeRecord> out;
  std::string line;
  for (std::size_t number = 1; std::getline(in, line); ++number) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(episode_from_json(line, number));
  }
  if (in.bad()) throw IoError("read error in " + path.string());
  return out;
}

void write_episodes(const std::vector<EpisodeRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write episode file " + path.string());
  for (const auto& r : records) out << episode_to_json(r) << '\n';
  out.flush();
  if (!out) throw IoError("write error in " + path.string());
}

}  // namespace rpr

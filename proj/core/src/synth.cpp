#include "rpr/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>

#include "rpr/errors.hpp"
#include "rpr/params.hpp"

namespace rpr {

namespace {

using synth::kKeys;
using synth::kPayloads;

constexpr std::uint64_t kWorldSeed = 0x6a09e667f3bcc909ULL;
constexpr std::size_t kPlanAttempts = 64;

const std::array<const char*, 11> kModifierTags{
    "ARGM-LOC", "ARGM-MNR", "ARGM-CAU", "ARGM-DIR", "ARGM-ADV", "ARGM-PRP",
    "ARGM-EXT", "ARGM-DIS", "ARGM-PRD", "ARGM-MOD", "ARGM-NEG",
};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

using Basis = std::vector<std::vector<double>>;

Basis orthonormal_basis(std::size_t dim, std::mt19937_64& rng) {
  Basis basis;
  while (basis.size() < dim) {
    std::vector<double> v(dim);
    for (auto& x : v) x = 2.0 * uniform01(rng) - 1.0;
    for (const auto& b : basis) {
      double dot = 0.0;
      for (std::size_t i = 0; i < dim; ++i) dot += v[i] * b[i];
      for (std::size_t i = 0; i < dim; ++i) v[i] -= dot * b[i];
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm < 1e-6) continue;
    for (auto& x : v) x /= norm;
    basis.push_back(std::move(v));
  }
  return basis;
}

struct World {
  Basis key, payload;
};

const World& world() {
  static const World w = [] {
    std::mt19937_64 rng(kWorldSeed);
    World out;
    out.key = orthonormal_basis(kKeys, rng);
    out.payload = orthonormal_basis(kPayloads, rng);
    return out;
  }();
  return w;
}

template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng() % i]);
}

bool on_side(Direction dir, std::size_t origin, std::size_t f) {
  return dir == Direction::retro ? f < origin : f > origin;
}

Direction opposite(Direction d) { return d == Direction::retro ? Direction::prosp : Direction::retro; }

struct Chain {
  std::vector<std::size_t> path;  // start, then one target per hop
  std::vector<Direction> dirs;
  std::vector<std::optional<std::size_t>> twins;
};

// Random chains until every hop has room for a twin on the far side of its
// origin (when twins are requested). Falls back to the chain with the most
// twins.
Chain sample_chain(const SynthSpec& spec, std::mt19937_64& rng) {
  const std::size_t n = spec.frames;
  Chain best;
  std::size_t best_score = 0;
  bool have = false;
  for (std::size_t attempt = 0; attempt < kPlanAttempts; ++attempt) {
    Chain c;
    std::vector<bool> used(n, false);
    c.path.push_back(rng() % n);
    used[c.path.back()] = true;
    bool ok = true;
    for (std::size_t i = 0; i < spec.hops && ok; ++i) {
      const std::size_t cur = c.path.back();
      Direction dir = (rng() & 1) ? Direction::retro : Direction::prosp;
      auto candidates = [&](Direction d) {
        std::vector<std::size_t> out;
        for (std::size_t f = 0; f < n; ++f) {
          if (!used[f] && on_side(d, cur, f)) out.push_back(f);
        }
        return out;
      };
      auto cands = candidates(dir);
      if (cands.empty()) {
        dir = opposite(dir);
        cands = candidates(dir);
      }
      if (cands.empty()) {
        ok = false;
        break;
      }
      const std::size_t t = cands[rng() % cands.size()];
      c.path.push_back(t);
      c.dirs.push_back(dir);
      used[t] = true;
    }
    if (!ok) continue;

    std::size_t score = 0;
    if (!spec.twins) {
      c.twins.assign(spec.hops, std::nullopt);
      return c;
    }
    for (std::size_t i = 0; i < spec.hops; ++i) {
      std::vector<std::size_t> slots;
      for (std::size_t f = 0; f < n; ++f) {
        if (!used[f] && on_side(opposite(c.dirs[i]), c.path[i], f)) slots.push_back(f);
      }
      if (slots.empty()) {
        c.twins.push_back(std::nullopt);
        continue;
      }
      const std::size_t d = slots[rng() % slots.size()];
      c.twins.push_back(d);
      used[d] = true;
      ++score;
    }
    if (!have || score > best_score) {
      best = std::move(c);
      best_score = score;
      have = true;
    }
    if (best_score == spec.hops) break;
  }
  if (!have) throw DomainError("unreachable plan: cannot place " + std::to_string(spec.hops) + " hops");
  return best;
}

void add_scaled(std::vector<double>& frame, std::size_t offset, const std::vector<double>& v) {
  for (std::size_t i = 0; i < v.size(); ++i) frame[offset + i] += synth::kAmplitude * v[i];
}

std::size_t decode_block(const std::vector<double>& frame, std::size_t offset, const Basis& basis,
                         const char* what) {
  std::size_t best = 0;
  double best_dot = -1e300;
  for (std::size_t k = 0; k < basis.size(); ++k) {
    double dot = 0.0;
    for (std::size_t i = 0; i < basis[k].size(); ++i) dot += frame[offset + i] * basis[k][i];
    dot /= synth::kAmplitude;
    if (dot > best_dot) {
      best_dot = dot;
      best = k;
    }
  }
  if (best_dot < 0.5) throw IntegrityError(std::string("frame carries no recognizable ") + what);
  return best;
}

std::string hop_tag(std::size_t i) { return "ARG" + std::to_string(i); }

// The single token of an argument's span that falls in [base, base + count).
std::size_t find_token(const EpisodeRecord& r, const std::string& tag, std::size_t base, std::size_t count) {
  for (const auto& arg : r.srl) {
    if (arg.tag != tag) continue;
    if (arg.end >= r.question_tokens.size() || arg.start > arg.end) {
      throw IntegrityError("episode " + r.id + ": span of " + tag + " outside the question");
    }
    for (std::size_t i = arg.start; i <= arg.end; ++i) {
      const std::size_t tok = r.question_tokens[i];
      if (tok >= base && tok < base + count) return tok - base;
    }
  }
  throw IntegrityError("episode " + r.id + ": question has no usable " + tag + " argument");
}

}  // namespace

void SynthSpec::validate() const {
  if (frames < 2) throw DomainError("synthetic spec: need at least 2 frames");
  if (args < 2) throw DomainError("synthetic spec: need at least 2 SRL arguments");
  if (hops < 1) throw DomainError("synthetic spec: need at least 1 hop");
  if (hops + 1 > frames) {
    throw DomainError("unreachable plan: " + std::to_string(hops) + " hops need " + std::to_string(hops + 1) +
                      " distinct frames, only " + std::to_string(frames) + " available");
  }
  if (hops > 6) throw DomainError("synthetic spec: at most 6 hops (ARG0..ARG5)");
  if (2 * hops + 1 > synth::kKeys) throw DomainError("synthetic spec: too many hops for the key space");
  if (args < hops + 1) {
    throw DomainError("synthetic spec: " + std::to_string(hops) + " hops need at least " +
                      std::to_string(hops + 1) + " SRL arguments");
  }
  if (args > hops + 2 + kModifierTags.size()) throw DomainError("synthetic spec: too many SRL arguments");
  if (options < 2 || options > kPayloads) {
    throw DomainError("synthetic spec: answer options must lie in [2, " + std::to_string(kPayloads) + "]");
  }
  if (input_dim < synth::kMinInputDim) {
    throw DomainError("synthetic spec: d_in must be at least " + std::to_string(synth::kMinInputDim));
  }
}

namespace synth {

FrameContent decode_frame(const std::vector<double>& frame) {
  if (frame.size() < kMinInputDim) throw IntegrityError("frame narrower than the synthetic layout");
  const World& w = world();
  FrameContent c;
  c.key = decode_block(frame, kKeyOffset, w.key, "key");
  c.payload = decode_block(frame, kPayloadOffset, w.payload, "payload");
  if (frame[kCueOffset] > 0.5 * kAmplitude) c.cue = Direction::retro;
  if (frame[kCueOffset + 1] > 0.5 * kAmplitude) c.cue = Direction::prosp;
  return c;
}

}  // namespace synth

EpisodeRecord generate_episode(std::uint64_t seed, const SynthSpec& spec, std::string id) {
  spec.validate();
  const World& w = world();
  std::mt19937_64 rng(splitmix64(seed));
  const std::size_t n = spec.frames;
  const std::size_t h = spec.hops;

  const Chain chain = sample_chain(spec, rng);
  const std::size_t evidence = chain.path.back();
  std::vector<int> role(n, 0);  // 1 chain, 2 twin
  for (std::size_t f : chain.path) role[f] = 1;
  for (const auto& d : chain.twins) {
    if (d) role[*d] = 2;
  }

  std::vector<std::size_t> keys(kKeys), payloads(kPayloads);
  for (std::size_t i = 0; i < kKeys; ++i) keys[i] = i;
  for (std::size_t i = 0; i < kPayloads; ++i) payloads[i] = i;
  shuffle(keys, rng);
  shuffle(payloads, rng);

  std::vector<synth::FrameContent> content(n);
  if (spec.cues) {
    for (std::size_t f = 0; f < n; ++f) {
      if (rng() & 1) content[f].cue = (rng() & 1) ? Direction::retro : Direction::prosp;
    }
  }
  for (std::size_t i = 0; i <= h; ++i) content[chain.path[i]].key = keys[i];
  for (std::size_t i = 0; i < h; ++i) {
    if (spec.cues) content[chain.path[i + 1]].cue = chain.dirs[i];
    if (chain.twins[i]) {
      content[*chain.twins[i]].key = keys[i + 1];
      if (spec.cues) content[*chain.twins[i]].cue = chain.dirs[i];
    }
  }
  for (std::size_t f = 0, k = h + 1; f < n; ++f) {
    if (role[f] != 0) continue;
    content[f].key = keys[k];
    k = k + 1 < kKeys ? k + 1 : h + 1;
  }
  // Distinct payloads while they last; the evidence payload is never reused.
  for (std::size_t f = 0, k = 1; f < n; ++f) {
    if (f == evidence) continue;
    content[f].payload = payloads[k];
    k = k + 1 < kPayloads ? k + 1 : 1;
  }
  content[evidence].payload = payloads[0];

  EpisodeRecord r;
  r.id = id.empty() ? "synth-" + std::to_string(seed) : std::move(id);
  r.frames.assign(n, std::vector<double>(spec.input_dim, 0.0));
  for (std::size_t f = 0; f < n; ++f) {
    auto& frame = r.frames[f];
    add_scaled(frame, synth::kKeyOffset, w.key[content[f].key]);
    add_scaled(frame, synth::kPayloadOffset, w.payload[content[f].payload]);
    if (content[f].cue) {
      frame[synth::kCueOffset + (*content[f].cue == Direction::retro ? 0 : 1)] = synth::kAmplitude;
    }
  }

  // Question: the start anchor, one argument per hop, a verb, and filler
  // modifiers, in random order.
  auto filler = [&] { return synth::kFillerToken + rng() % synth::kFillers; };
  std::vector<std::pair<std::string, std::vector<std::size_t>>> args;
  args.push_back({"ARGM-TMP", {filler(), synth::kAnchorToken + content[chain.path[0]].key}});
  for (std::size_t i = 0; i < h; ++i) {
    args.push_back({hop_tag(i), {filler(), synth::kKeyToken + content[chain.path[i + 1]].key}});
  }
  if (spec.args >= h + 2) args.push_back({"V", {synth::kVerbToken + rng() % synth::kVerbs}});
  for (std::size_t i = 0; args.size() < spec.args; ++i) args.push_back({kModifierTags[i], {filler(), filler()}});
  shuffle(args, rng);
  for (auto& [tag, tokens] : args) {
    const std::size_t start = r.question_tokens.size();
    r.question_tokens.insert(r.question_tokens.end(), tokens.begin(), tokens.end());
    r.srl.push_back({tag, start, r.question_tokens.size() - 1});
  }

  // Answers: the evidence payload plus payloads of off-chain frames. Twins come
  // last: a twin payload among the options shares the evidence key, so early
  // in training its gradient cancels the evidence's and learning stalls.
  std::vector<std::size_t> pool;
  for (std::size_t f = 0; f < n; ++f) {
    if (role[f] != 1) pool.push_back(f);
  }
  shuffle(pool, rng);
  auto rank = [&](std::size_t f) { return role[f] == 2 ? 1 : 0; };
  std::stable_sort(pool.begin(), pool.end(), [&](std::size_t a, std::size_t b) { return rank(a) < rank(b); });
  for (std::size_t i = 0; i + 1 < chain.path.size(); ++i) pool.push_back(chain.path[i]);

  std::vector<std::size_t> option_payloads{content[evidence].payload};
  auto add_option = [&](std::size_t payload) {
    if (option_payloads.size() >= spec.options) return;
    if (std::find(option_payloads.begin(), option_payloads.end(), payload) == option_payloads.end()) {
      option_payloads.push_back(payload);
    }
  };
  for (std::size_t f : pool) add_option(content[f].payload);
  for (std::size_t p : payloads) add_option(p);

  std::vector<std::size_t> order(option_payloads.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  shuffle(order, rng);
  for (std::size_t slot = 0; slot < order.size(); ++slot) {
    r.answers.push_back({{synth::kPayloadToken + option_payloads[order[slot]]}});
    if (order[slot] == 0) r.label = slot;
  }

  HopPlan plan;
  plan.start_frame = chain.path[0];
  for (std::size_t i = 0; i < h; ++i) plan.hops.push_back({chain.dirs[i], chain.path[i + 1]});
  plan.evidence_frame = evidence;
  r.plan = plan;
  return r;
}

std::size_t oracle_answer(const EpisodeRecord& r) {
  if (!r.plan) throw DomainError("oracle_answer: episode " + r.id + " has no hop plan");
  const HopPlan& plan = *r.plan;
  const std::size_t n = r.frames.size();
  std::vector<synth::FrameContent> content;
  content.reserve(n);
  for (const auto& f : r.frames) content.push_back(synth::decode_frame(f));

  if (plan.start_frame >= n) throw IntegrityError("episode " + r.id + ": start frame out of range");
  const std::size_t start_key = find_token(r, "ARGM-TMP", synth::kAnchorToken, kKeys);
  if (content[plan.start_frame].key != start_key) {
    throw IntegrityError("episode " + r.id + ": start frame key does not match the question");
  }
  std::size_t cur = plan.start_frame;
  for (std::size_t i = 0; i < plan.hops.size(); ++i) {
    const Hop& hop = plan.hops[i];
    const std::size_t key = find_token(r, hop_tag(i), synth::kKeyToken, kKeys);
    std::vector<std::size_t> matches;
    for (std::size_t f = 0; f < n; ++f) {
      if (f == cur) continue;
      const bool admitted = hop.direction == Direction::retro ? f <= cur : f >= cur;
      if (admitted && content[f].key == key) matches.push_back(f);
    }
    if (matches.size() != 1 || matches[0] != hop.target) {
      throw IntegrityError("episode " + r.id + ": hop " + std::to_string(i + 1) +
                           " does not lead to its planned target");
    }
    cur = hop.target;
  }
  if (cur != plan.evidence_frame) throw IntegrityError("episode " + r.id + ": chain ends off the evidence frame");

  const std::size_t token = synth::kPayloadToken + content[cur].payload;
  std::optional<std::size_t> label;
  for (std::size_t k = 0; k < r.answers.size(); ++k) {
    if (r.answers[k].tokens == std::vector<std::size_t>{token}) {
      if (label) throw IntegrityError("episode " + r.id + ": evidence payload appears in two options");
      label = k;
    }
  }
  if (!label) throw IntegrityError("episode " + r.id + ": no option carries the evidence payload");
  return *label;
}

std::size_t probe_answer(const EpisodeRecord& r, std::size_t frame, std::uint64_t seed) {
  if (frame >= r.frames.size()) throw DomainError("probe_answer: frame index out of range");
  if (r.answers.empty()) throw DomainError("probe_answer: no answer options");
  const std::size_t token = synth::kPayloadToken + synth::decode_frame(r.frames[frame]).payload;
  for (std::size_t k = 0; k < r.answers.size(); ++k) {
    if (r.answers[k].tokens == std::vector<std::size_t>{token}) return k;
  }
  return splitmix64(seed ^ fnv1a(r.id) ^ frame) % r.answers.size();
}

SynthSplit make_split(std::size_t count, std::uint64_t seed, const SynthSpec& spec) {
  if (count < 3) throw DomainError("make_split: need at least 3 episodes, got " + std::to_string(count));
  spec.validate();
  std::vector<std::string> ids(count);
  std::vector<std::pair<std::uint64_t, std::size_t>> order(count);
  for (std::size_t i = 0; i < count; ++i) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "syn-%llu-%06zu", static_cast<unsigned long long>(seed), i);
    ids[i] = buf;
    order[i] = {splitmix64(fnv1a(ids[i]) ^ seed), i};
  }
  std::sort(order.begin(), order.end());
  const std::size_t held = std::max<std::size_t>(1, count / 10);
  std::vector<int> bucket(count, 0);
  for (std::size_t k = 0; k < held; ++k) bucket[order[k].second] = 1;
  for (std::size_t k = held; k < 2 * held; ++k) bucket[order[k].second] = 2;

  SynthSplit split;
  for (std::size_t i = 0; i < count; ++i) {
    EpisodeRecord r = generate_episode(splitmix64(seed ^ splitmix64(i)), spec, ids[i]);
    (bucket[i] == 0 ? split.train : bucket[i] == 1 ? split.dev : split.test).push_back(std::move(r));
  }
  return split;
}

}  // namespace rpr

#include "rpr_cli/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <json.hpp>
#include <optional>

#include "rpr/checkpoint.hpp"
#include "rpr/config_io.hpp"
#include "rpr/episode_io.hpp"
#include "rpr/errors.hpp"
#include "rpr/model.hpp"
#include "rpr/synth.hpp"
#include "rpr/trace_io.hpp"
#include "rpr/trainer.hpp"
#include "rpr_cli/grad_suites.hpp"

namespace rpr::cli {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

/// Everything a subcommand may need, after layering defaults, file, flags.
struct Resolved {
  TrainConfig train;
  SynthSpec synth;
  std::size_t count = 5000;
};

template <typename T, typename U>
void set_if(const std::optional<T>& v, U& target) {
  if (v) target = static_cast<U>(*v);
}

void apply(const ConfigValues& c, Resolved& r) {
  set_if(c.seed, r.train.seed);
  HyperParams& hp = r.train.hp;
  set_if(c.steps, hp.steps);
  set_if(c.tau, hp.tau);
  set_if(c.srl_tau, hp.srl_tau);
  set_if(c.alpha, hp.alpha);
  if (c.chi_mode) {
    if (*c.chi_mode == "argument_count") hp.chi_mode = ChiMode::argument_count;
    else if (*c.chi_mode == "unit") hp.chi_mode = ChiMode::unit;
    else throw DomainError("chi_mode must be argument_count or unit, got '" + *c.chi_mode + "'");
  }
  set_if(c.use_coverage, hp.use_coverage);
  set_if(c.max_frames, hp.max_frames);
  set_if(c.max_args, hp.max_args);
  set_if(c.dim, hp.dim);
  set_if(c.input_dim, r.train.input_dim);
  set_if(c.input_dim, r.synth.input_dim);
  set_if(c.vocab, r.train.vocab);
  set_if(c.lr, r.train.lr);
  set_if(c.weight_decay, r.train.weight_decay);
  set_if(c.batch, r.train.batch);
  set_if(c.epochs, r.train.epochs);
  if (c.setting) {
    auto s = parse_setting(*c.setting);
    if (!s) throw DomainError("setting must be quarter or half, got '" + *c.setting + "'");
    r.train.setting = *s;
  }
  set_if(c.binary_aux, r.train.binary_aux);
  set_if(c.gate_surrogate, r.train.gate_surrogate);
  set_if(c.jobs, r.train.jobs);
  set_if(c.count, r.count);
  set_if(c.frames, r.synth.frames);
  set_if(c.args, r.synth.args);
  set_if(c.hops, r.synth.hops);
  set_if(c.options, r.synth.options);
  set_if(c.twins, r.synth.twins);
  set_if(c.cues, r.synth.cues);
}

json hp_json(const HyperParams& hp) {
  return {{"steps", hp.steps},
          {"tau", hp.tau},
          {"srl_tau", hp.srl_tau},
          {"alpha", hp.alpha},
          {"chi_mode", hp.chi_mode == ChiMode::unit ? "unit" : "argument_count"},
          {"use_coverage", hp.use_coverage},
          {"dim", hp.dim},
          {"max_frames", hp.max_frames},
          {"max_args", hp.max_args}};
}

json train_json(const TrainConfig& t) {
  return {{"seed", t.seed},       {"lr", t.lr},
          {"weight_decay", t.weight_decay},
          {"batch", t.batch},     {"epochs", t.epochs},
          {"setting", std::string(to_string(t.setting))},
          {"binary_aux", t.binary_aux},
          {"gate_surrogate", t.gate_surrogate},
          {"input_dim", t.input_dim},
          {"vocab", t.vocab},     {"jobs", t.jobs}};
}

json synth_json(const Resolved& r) {
  return {{"seed", r.train.seed},        {"count", r.count},
          {"frames", r.synth.frames},    {"args", r.synth.args},
          {"hops", r.synth.hops},        {"options", r.synth.options},
          {"input_dim", r.synth.input_dim},
          {"twins", r.synth.twins},      {"cues", r.synth.cues}};
}

void emit(std::ostream& out, const json& j) { out << j.dump() << '\n'; }

/// Options shared by subcommands, bound into a ConfigValues overlay.
struct Flags {
  std::optional<std::string> config;
  ConfigValues values;
  bool no_coverage = false;
  bool twins = false;
  bool cues = false;
};

void add_config(CLI::App& app, Flags& f) {
  app.add_option("--config", f.config, "JSON config file (default: $" + std::string(kConfigEnv) + ")");
  app.add_option("--seed", f.values.seed, "random seed");
}

void add_reasoning(CLI::App& app, Flags& f) {
  app.add_option("--steps", f.values.steps, "reasoning steps T");
  app.add_option("--tau", f.values.tau, "frame attention temperature");
  app.add_option("--alpha", f.values.alpha, "gate threshold");
  app.add_flag("--no-coverage", f.no_coverage, "feed a zero coverage vector to the SRL query");
  app.add_option("--jobs", f.values.jobs, "evaluation threads");
}

void add_training(CLI::App& app, Flags& f) {
  app.add_option("--dim", f.values.dim, "model width d");
  app.add_option("--lr", f.values.lr, "learning rate");
  app.add_option("--weight-decay", f.values.weight_decay, "AdamW decoupled weight decay");
  app.add_option("--batch", f.values.batch, "batch size");
  app.add_option("--epochs", f.values.epochs, "training epochs");
}

Resolved resolve(const Flags& f, Resolved base = {}) {
  std::optional<std::string> path = f.config;
  if (!path) {
    if (const char* env = std::getenv(kConfigEnv); env && *env) path = env;
  }
  if (path) apply(read_config(*path), base);
  ConfigValues flags = f.values;
  if (f.no_coverage) flags.use_coverage = false;
  if (f.twins) flags.twins = true;
  if (f.cues) flags.cues = true;
  apply(flags, base);
  return base;
}

std::vector<EpisodeRecord> load(const std::string& path, std::size_t input_dim) {
  auto records = read_episodes(path);
  for (const auto& r : records) {
    for (const auto& frame : r.frames) {
      if (frame.size() != input_dim) {
        throw ShapeError(path + ": episode " + r.id + " has frames of width " + std::to_string(frame.size()) +
                         ", model expects " + std::to_string(input_dim));
      }
    }
  }
  return records;
}

/// Checkpoint hyperparameters, overridden by any file or flag values.
struct Loaded {
  Checkpoint ck;
  Resolved cfg;
};

Loaded load_checkpoint(const std::string& path, const Flags& f) {
  Loaded l;
  l.ck = read_checkpoint(path);
  Resolved base;
  base.train.hp = l.ck.hp;
  base.train.seed = l.ck.seed;
  base.train.input_dim = l.ck.params.config().input_dim;
  base.train.vocab = l.ck.params.config().vocab;
  l.cfg = resolve(f, base);
  l.cfg.train.hp.validate();
  if (l.cfg.train.jobs < 1) throw DomainError("jobs must be >= 1");
  check_compatible(l.ck.params, l.cfg.train.hp);
  return l;
}

int cmd_gen_synth(const Flags& f, const std::string& out_prefix, std::ostream& out) {
  Resolved r = resolve(f);
  emit(out, {{"event", "config"}, {"command", "gen-synth"}, {"synth", synth_json(r)}});
  r.synth.validate();
  SynthSplit split = make_split(r.count, r.train.seed, r.synth);
  json files = json::array();
  for (auto [name, part] : {std::pair{"train", &split.train}, {"dev", &split.dev}, {"test", &split.test}}) {
    const std::string path = out_prefix + "." + name + ".jsonl";
    write_episodes(*part, path);
    files.push_back(path);
  }
  emit(out, {{"event", "gen-synth"},
             {"train", split.train.size()},
             {"dev", split.dev.size()},
             {"test", split.test.size()},
             {"files", files}});
  return kExitOk;
}

int cmd_train(const Flags& f, const std::string& train_path, const std::optional<std::string>& dev_path,
              const std::string& checkpoint, std::ostream& out) {
  Resolved r = resolve(f);
  auto train_set = read_episodes(train_path);
  if (train_set.empty()) throw DomainError(train_path + ": no episodes");
  if (!f.values.input_dim) r.train.input_dim = train_set.front().frames.front().size();
  train_set = load(train_path, r.train.input_dim);
  std::vector<EpisodeRecord> dev_set;
  if (dev_path) dev_set = load(*dev_path, r.train.input_dim);
  emit(out, {{"event", "config"}, {"command", "train"}, {"hyperparams", hp_json(r.train.hp)},
             {"train", train_json(r.train)}});
  r.train.validate();

  TrainResult result = train(train_set, dev_set, r.train, [&](const EpochReport& e) {
    json line = {{"event", "epoch"}, {"epoch", e.epoch}, {"train_loss", e.train_loss}, {"best", e.best}};
    line["dev_accuracy"] = e.dev_accuracy ? json(*e.dev_accuracy) : json(nullptr);
    emit(out, line);
    out.flush();
  });
  write_checkpoint({result.best.clone(), r.train.hp, r.train.seed}, checkpoint);
  json done = {{"event", "done"}, {"best_epoch", result.report.best_epoch}, {"checkpoint", checkpoint}};
  done["best_dev_accuracy"] =
      result.report.best_dev_accuracy ? json(*result.report.best_dev_accuracy) : json(nullptr);
  emit(out, done);
  return kExitOk;
}

int cmd_eval(const Flags& f, const std::string& checkpoint, const std::string& data, std::ostream& out) {
  Loaded l = load_checkpoint(checkpoint, f);
  const auto records = load(data, l.cfg.train.input_dim);
  emit(out, {{"event", "config"}, {"command", "eval"}, {"hyperparams", hp_json(l.cfg.train.hp)},
             {"setting", std::string(to_string(l.cfg.train.setting))}, {"jobs", l.cfg.train.jobs}});
  const EvalResult e = evaluate(records, l.ck.params, l.cfg.train.hp, l.cfg.train.setting, l.cfg.train.jobs);
  emit(out, {{"event", "eval"},
             {"setting", std::string(to_string(l.cfg.train.setting))},
             {"accuracy", e.accuracy},
             {"correct", e.correct},
             {"count", e.count},
             {"episodes", records.size()}});
  return kExitOk;
}

int cmd_trace(const Flags& f, const std::string& checkpoint, const std::string& data, const std::string& trace_path,
              bool summary, std::ostream& out) {
  Loaded l = load_checkpoint(checkpoint, f);
  const auto records = load(data, l.cfg.train.input_dim);
  const HyperParams& hp = l.cfg.train.hp;
  emit(out, {{"event", "config"}, {"command", "trace"}, {"hyperparams", hp_json(hp)}, {"jobs", l.cfg.train.jobs}});

  std::vector<EpisodeTrace> traces(records.size());
  parallel_for(records.size(), l.cfg.train.jobs, [&](std::size_t i) {
    const EpisodeRecord& r = records[i];
    ForwardResult fwd = forward_episode(r, l.ck.params, hp);
    EpisodeTrace& t = traces[i];
    t.episode_id = r.id;
    t.steps = fwd.reasoning.trace;
    for (const auto& a : r.srl) t.srl_tags.push_back(a.tag);
    t.prediction = fwd.prediction;
    t.label = r.label;
    if (r.plan && !r.plan->hops.empty()) t.planned_direction = r.plan->hops.front().direction;
  });

  std::size_t planned = 0, matched = 0, correct = 0;
  for (const auto& t : traces) {
    correct += t.prediction == t.label ? 1 : 0;
    if (!t.planned_direction) continue;
    ++planned;
    matched += t.steps.front().branch == *t.planned_direction ? 1 : 0;
  }
  if (summary) {
    auto sorted = traces;
    std::sort(sorted.begin(), sorted.end(),
              [](const EpisodeTrace& a, const EpisodeTrace& b) { return a.episode_id < b.episode_id; });
    for (const auto& t : sorted) out << t.episode_id << '\n' << hop_summary(t);
  }
  write_trace(std::move(traces), trace_path);

  json line = {{"event", "trace"},
               {"episodes", records.size()},
               {"accuracy", records.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(records.size())},
               {"planned", planned},
               {"out", trace_path}};
  line["direction_recovery"] = planned ? json(static_cast<double>(matched) / static_cast<double>(planned)) : json(nullptr);
  emit(out, line);
  return kExitOk;
}

int cmd_gradcheck(const Flags& f, const std::string& scope, std::ostream& out, std::ostream& err) {
  Resolved r = resolve(f);
  emit(out, {{"event", "config"}, {"command", "gradcheck"}, {"scope", scope}, {"seed", r.train.seed},
             {"eps", kGradEps}, {"tolerance", kGradTolerance}});
  std::vector<std::pair<std::string, SuiteResult>> all;
  if (scope == "op" || scope == "all") {
    for (auto& s : op_suite(r.train.seed)) all.emplace_back("op", std::move(s));
  }
  if (scope == "end2end" || scope == "all") {
    for (auto& s : end_to_end_suite(r.train.seed)) all.emplace_back("end2end", std::move(s));
  }

  double worst = 0.0;
  std::string worst_component;
  json offenders = json::array();
  for (const auto& [suite, s] : all) {
    const GradCheckEntry* e = s.report.worst();
    const double rel = s.report.max_rel_error();
    json line = {{"event", "gradcheck"}, {"scope", suite}, {"component", s.component}, {"max_rel_error", rel},
                 {"pass", rel < kGradTolerance}};
    if (e) {
      line["tensor"] = e->name;
      line["worst_index"] = e->worst_index;
      line["analytic"] = e->analytic;
      line["numeric"] = e->numeric;
    }
    emit(out, line);
    if (rel >= worst) {
      worst = rel;
      worst_component = suite + ":" + s.component;
    }
    if (rel >= kGradTolerance) offenders.push_back(suite + ":" + s.component);
  }
  emit(out, {{"event", "gradcheck-summary"}, {"max_rel_error", worst}, {"worst", worst_component},
             {"components", all.size()}, {"passed", offenders.empty()}, {"offenders", offenders}});
  if (!offenders.empty()) {
    err << "gradcheck: " << offenders.size() << " component(s) at or above " << kGradTolerance << ": "
        << offenders.dump() << '\n';
    return kExitCheckFailed;
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Retrospective/prospective multi-step reasoning over video frames", "rpr"};
  app.require_subcommand(1);

  Flags gen_flags, train_flags, eval_flags, trace_flags, grad_flags;
  std::string gen_out, ck_out, train_path, eval_ck, eval_data, trace_ck, trace_data, trace_out;
  std::optional<std::string> dev_path;
  std::string scope = "all";
  bool summary = false;

  auto* gen = app.add_subcommand("gen-synth", "Generate synthetic train/dev/test episode files");
  add_config(*gen, gen_flags);
  gen->add_option("--count", gen_flags.values.count, "episodes in total (split 80/10/10)");
  gen->add_option("--frames", gen_flags.values.frames, "frames per episode n");
  gen->add_option("--args", gen_flags.values.args, "SRL arguments per question N");
  gen->add_option("--hops", gen_flags.values.hops, "planted hops");
  gen->add_option("--options", gen_flags.values.options, "answer options M");
  gen->add_option("--input-dim", gen_flags.values.input_dim, "raw frame width d_in");
  gen->add_flag("--twins", gen_flags.twins, "add a same-key twin on the far side of every hop");
  gen->add_flag("--cues", gen_flags.cues, "mark chain targets with a direction cue");
  gen->add_option("--out", gen_out, "output prefix; writes PREFIX.{train,dev,test}.jsonl")->required();

  auto* tr = app.add_subcommand("train", "Train on an episode file and write the best checkpoint");
  add_config(*tr, train_flags);
  add_reasoning(*tr, train_flags);
  add_training(*tr, train_flags);
  tr->add_option("--setting", train_flags.values.setting, "objective: quarter or half");
  tr->add_option("--train", train_path, "training episodes")->required();
  tr->add_option("--dev", dev_path, "dev episodes for model selection");
  tr->add_option("--out", ck_out, "checkpoint path")->required();

  auto* ev = app.add_subcommand("eval", "Accuracy of a checkpoint on an episode file");
  add_config(*ev, eval_flags);
  add_reasoning(*ev, eval_flags);
  ev->add_option("--setting", eval_flags.values.setting, "quarter or half");
  ev->add_option("--checkpoint", eval_ck, "checkpoint path")->required();
  ev->add_option("--data", eval_data, "episodes")->required();

  auto* tc = app.add_subcommand("trace", "Write per-step reasoning traces");
  add_config(*tc, trace_flags);
  add_reasoning(*tc, trace_flags);
  tc->add_option("--checkpoint", trace_ck, "checkpoint path")->required();
  tc->add_option("--data", trace_data, "episodes")->required();
  tc->add_option("--out", trace_out, "trace file (JSON Lines)")->required();
  tc->add_flag("--summary", summary, "print a plain-text hop summary per episode");

  auto* gc = app.add_subcommand("gradcheck", "Compare analytic gradients with central differences");
  add_config(*gc, grad_flags);
  gc->add_option("--scope", scope, "op, end2end or all")->check(CLI::IsMember({"op", "end2end", "all"}));

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) return cmd_gen_synth(gen_flags, gen_out, out);
    if (*tr) return cmd_train(train_flags, train_path, dev_path, ck_out, out);
    if (*ev) return cmd_eval(eval_flags, eval_ck, eval_data, out);
    if (*tc) return cmd_trace(trace_flags, trace_ck, trace_data, trace_out, summary, out);
    return cmd_gradcheck(grad_flags, scope, out, err);
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace rpr::cli

#include "rpr/trainer.hpp"

#include <cmath>
#include <exception>
#include <random>
#include <string>
#include <thread>

#include "rpr/answer.hpp"
#include "rpr/errors.hpp"
#include "rpr/model.hpp"

namespace rpr {

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

Tensor half_objective(const Tensor& scores, std::size_t label) {
  const std::size_t m = scores.cols();
  Tensor positive = loss_binary(pick(scores, 0, label), true);
  std::vector<Tensor> negatives;
  for (std::size_t k = 0; k < m; ++k) {
    if (k != label) negatives.push_back(loss_binary(pick(scores, 0, k), false));
  }
  Tensor negative = scale(sum(concat_cols(negatives)), 1.0 / static_cast<double>(negatives.size()));
  return scale(add(positive, negative), 0.5);
}

}  // namespace

std::string_view to_string(Setting s) { return s == Setting::quarter ? "quarter" : "half"; }

std::optional<Setting> parse_setting(std::string_view s) {
  if (s == "quarter") return Setting::quarter;
  if (s == "half") return Setting::half;
  return std::nullopt;
}

void TrainConfig::validate() const {
  optimizer().validate();
  if (batch < 1) throw DomainError("batch size must be >= 1");
  if (jobs < 1) throw DomainError("jobs must be >= 1");
  hp.validate();
  model_config().validate();
}

ModelConfig TrainConfig::model_config() const { return {hp.dim, input_dim, vocab, hp.max_args}; }

AdamWConfig TrainConfig::optimizer() const {
  AdamWConfig c;
  c.lr = lr;
  c.weight_decay = weight_decay;
  return c;
}

Tensor episode_loss(const EpisodeRecord& record, const ModelParams& params, const TrainConfig& config) {
  ForwardOptions options;
  options.run.gate_surrogate = config.gate_surrogate;
  ForwardResult fwd = forward_episode(record, params, config.hp, options);
  if (record.label >= fwd.scores.cols()) {
    throw DomainError("episode " + record.id + ": label outside answer options");
  }
  if (fwd.scores.cols() < 2) throw DomainError("episode " + record.id + ": fewer than two answer options");
  if (config.setting == Setting::half) return half_objective(fwd.scores, record.label);
  Tensor loss = loss_multi(fwd.scores, record.label);
  if (config.binary_aux) loss = add(loss, scale(half_objective(fwd.scores, record.label), 0.5));
  return loss;
}

TrainResult train(const std::vector<EpisodeRecord>& train_set, const std::vector<EpisodeRecord>& dev_set,
                  const TrainConfig& config, const std::function<void(const EpochReport&)>& on_epoch) {
  config.validate();
  return train(train_set, dev_set, config, ModelParams::initialize(config.model_config(), config.seed), on_epoch);
}

TrainResult train(const std::vector<EpisodeRecord>& train_set, const std::vector<EpisodeRecord>& dev_set,
                  const TrainConfig& config, ModelParams params,
                  const std::function<void(const EpochReport&)>& on_epoch) {
  config.validate();
  if (train_set.empty()) throw DomainError("train: empty training set");
  check_compatible(params, config.hp);
  const AdamWConfig opt = config.optimizer();

  TrainResult result;
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);

    double loss_total = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch) {
      const std::size_t end = std::min(order.size(), begin + config.batch);
      const double inv_batch = 1.0 / static_cast<double>(end - begin);
      for (std::size_t k = begin; k < end; ++k) {
        const EpisodeRecord& record = train_set[order[k]];
        Tensor loss = episode_loss(record, params, config);
        if (!std::isfinite(loss.item())) {
          throw NumericError("non-finite loss on episode " + record.id + " at epoch " + std::to_string(epoch) +
                             ", optimizer step " + std::to_string(params.step()));
        }
        loss_total += loss.item();
        backward(scale(loss, inv_batch));
      }
      for (const auto& [name, t] : params.tensors()) {
        if (t.has_grad() && !all_finite(t.grad())) {
          throw NumericError("non-finite gradient in '" + name + "' at epoch " + std::to_string(epoch));
        }
      }
      optimizer_step(params, opt);
    }

    EpochReport report;
    report.epoch = epoch;
    report.train_loss = loss_total / static_cast<double>(train_set.size());
    if (!dev_set.empty()) {
      report.dev_accuracy = evaluate(dev_set, params, config.hp, config.setting, config.jobs).accuracy;
      report.best = !result.report.best_dev_accuracy || *report.dev_accuracy > *result.report.best_dev_accuracy;
    } else {
      report.best = true;
    }
    if (report.best) {
      result.report.best_epoch = epoch;
      result.report.best_dev_accuracy = report.dev_accuracy;
      result.best = params.clone();
    }
    result.report.epochs.push_back(report);
    if (on_epoch) on_epoch(report);
  }
  if (config.epochs == 0) result.best = params.clone();
  result.last = std::move(params);
  return result;
}

std::size_t negative_option(const EpisodeRecord& record) {
  const std::size_t m = record.answers.empty() ? 0 : record.answers.size();
  if (m < 2) throw DomainError("episode " + record.id + ": half setting needs at least two options");
  return (record.label + 1 + fnv1a(record.id) % (m - 1)) % m;
}

EvalResult quarter_accuracy(std::span<const std::size_t> predictions, std::span<const EpisodeRecord> records) {
  if (predictions.size() != records.size()) throw ShapeError("quarter_accuracy: one prediction per record");
  EvalResult r;
  r.count = records.size();
  for (std::size_t i = 0; i < records.size(); ++i) r.correct += predictions[i] == records[i].label ? 1 : 0;
  r.accuracy = r.count ? static_cast<double>(r.correct) / static_cast<double>(r.count) : 0.0;
  return r;
}

void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, count));
  std::vector<std::exception_ptr> errors(count);
  auto worker = [&](std::size_t w) {
    NoGradGuard guard;
    for (std::size_t i = w; i < count; i += jobs) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (jobs == 1) {
    worker(0);
  } else {
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < jobs; ++w) threads.emplace_back(worker, w);
    for (auto& t : threads) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

EvalResult evaluate(std::span<const EpisodeRecord> records, const ModelParams& params, const HyperParams& hp,
                    Setting setting, std::size_t jobs) {
  check_compatible(params, hp);
  if (setting == Setting::quarter) {
    std::vector<std::size_t> predictions(records.size());
    parallel_for(records.size(), jobs, [&](std::size_t i) {
      predictions[i] = forward_episode(records[i], params, hp).prediction;
    });
    return quarter_accuracy(predictions, records);
  }
  std::vector<std::size_t> hits(records.size());
  parallel_for(records.size(), jobs, [&](std::size_t i) {
    const EpisodeRecord& r = records[i];
    ForwardResult fwd = forward_episode(r, params, hp);
    if (r.label >= fwd.scores.cols()) throw DomainError("episode " + r.id + ": label outside answer options");
    const double positive = fwd.scores.at(0, r.label);
    const double negative = fwd.scores.at(0, negative_option(r));
    hits[i] = (positive > 0.0 ? 1 : 0) + (negative > 0.0 ? 0 : 1);
  });
  EvalResult out;
  out.count = 2 * records.size();
  for (std::size_t h : hits) out.correct += h;
  out.accuracy = out.count ? static_cast<double>(out.correct) / static_cast<double>(out.count) : 0.0;
  return out;
}

EvalResult direction_recovery(std::span<const EpisodeRecord> records, const ModelParams& params,
                              const HyperParams& hp, std::size_t jobs) {
  check_compatible(params, hp);
  std::vector<int> match(records.size(), -1);
  parallel_for(records.size(), jobs, [&](std::size_t i) {
    const EpisodeRecord& r = records[i];
    if (!r.plan || r.plan->hops.empty()) return;
    ForwardResult fwd = forward_episode(r, params, hp);
    match[i] = fwd.reasoning.trace.front().branch == r.plan->hops.front().direction ? 1 : 0;
  });
  EvalResult out;
  for (int m : match) {
    if (m < 0) continue;
    ++out.count;
    out.correct += static_cast<std::size_t>(m);
  }
  out.accuracy = out.count ? static_cast<double>(out.correct) / static_cast<double>(out.count) : 0.0;
  return out;
}

}  // namespace rpr

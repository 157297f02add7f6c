#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "rpr/episode.hpp"
#include "rpr/optimizer.hpp"
#include "rpr/params.hpp"
#include "rpr/reasoner.hpp"

namespace rpr {

/// quarter: pick the correct option out of M. half: decide per
/// (question, candidate) pair whether the candidate is correct.
enum class Setting { quarter, half };

std::string_view to_string(Setting s);
std::optional<Setting> parse_setting(std::string_view s);

struct TrainConfig {
  double lr = 1e-3;
  // 0.01 lets some seeds memorize the synthetic training split before they
  // find the retrieval rule; 0.05 does not.
  double weight_decay = 0.05;
  std::size_t batch = 8;
  std::size_t epochs = 10;
  std::uint64_t seed = 1;
  HyperParams hp;
  /// d and N_max come from hp; the rest sizes the embeddings and frame input.
  std::size_t input_dim = 64;
  std::size_t vocab = 256;
  /// Objective. quarter uses loss_multi; half uses loss_binary on the
  /// correct option and the mean over the incorrect ones, weighted 0.5 each.
  Setting setting = Setting::quarter;
  /// With the quarter objective, also adds 0.5 times the half objective.
  bool binary_aux = false;
  bool gate_surrogate = true;
  std::size_t jobs = 1;  // dev evaluation threads

  void validate() const;
  ModelConfig model_config() const;
  AdamWConfig optimizer() const;
};

struct EpochReport {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  std::optional<double> dev_accuracy;
  bool best = false;

  bool operator==(const EpochReport&) const = default;
};

struct TrainReport {
  std::vector<EpochReport> epochs;
  std::size_t best_epoch = 0;
  std::optional<double> best_dev_accuracy;

  bool operator==(const TrainReport&) const = default;
};

struct TrainResult {
  TrainReport report;
  ModelParams best;  // highest dev accuracy, earliest epoch on ties; last epoch without dev data
  ModelParams last;
};

/// Per-episode training loss under the configured objective.
Tensor episode_loss(const EpisodeRecord& record, const ModelParams& params, const TrainConfig& config);

/// Mini-batch AdamW over shuffled episodes (seeded per epoch). The batch loss
/// is the mean of its episode losses. Throws DomainError on an empty training
/// set and NumericError on a non-finite loss.
TrainResult train(const std::vector<EpisodeRecord>& train_set, const std::vector<EpisodeRecord>& dev_set,
                  const TrainConfig& config,
                  const std::function<void(const EpochReport&)>& on_epoch = {});
/// Continues from the given parameters.
TrainResult train(const std::vector<EpisodeRecord>& train_set, const std::vector<EpisodeRecord>& dev_set,
                  const TrainConfig& config, ModelParams initial,
                  const std::function<void(const EpochReport&)>& on_epoch = {});

struct EvalResult {
  double accuracy = 0.0;
  std::size_t correct = 0;
  std::size_t count = 0;  // episodes (quarter) or pairs (half)
};

/// The one incorrect option paired with the correct one in the half setting.
/// Deterministic in the episode id.
std::size_t negative_option(const EpisodeRecord& record);

/// Fraction of predictions equal to the record labels.
EvalResult quarter_accuracy(std::span<const std::size_t> predictions, std::span<const EpisodeRecord> records);

/// quarter: argmax over all options. half: two balanced pairs per episode (the
/// correct option and negative_option), decided by sigmoid(score) > 0.5.
/// Results do not depend on jobs.
EvalResult evaluate(std::span<const EpisodeRecord> records, const ModelParams& params, const HyperParams& hp,
                    Setting setting, std::size_t jobs = 1);

/// Fraction of plan-annotated episodes whose traced first-step branch matches
/// the first planted hop direction. count is the number of such episodes.
EvalResult direction_recovery(std::span<const EpisodeRecord> records, const ModelParams& params,
                              const HyperParams& hp, std::size_t jobs = 1);

/// Runs fn(i) for i in [0, count) on up to jobs threads. The first exception
/// (by index) is rethrown after all workers finish.
void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& fn);

}  // namespace rpr

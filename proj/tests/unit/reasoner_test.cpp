#include <gtest/gtest.h>

#include <numeric>

#include "reference_model.hpp"
#include "rpr/errors.hpp"
#include "rpr/model.hpp"
#include "rpr/reasoner.hpp"
#include "test_support.hpp"

namespace rpr {
namespace {

using testing::small_episode;
using testing::small_hp;
using testing::small_params;

void fill(Tensor& t, double value) {
  for (double& x : t.mutable_values()) x = value;
}

RunResult run_episode(const EpisodeRecord& rec, const ModelParams& params, const HyperParams& hp) {
  return forward_episode(rec, params, hp).reasoning;
}

TEST(HyperParams, Validation) {
  HyperParams hp;
  EXPECT_NO_THROW(hp.validate());
  hp.steps = 0;
  EXPECT_THROW(hp.validate(), DomainError);
  hp = {};
  hp.tau = 0.0;
  EXPECT_THROW(hp.validate(), DomainError);
  hp = {};
  hp.alpha = 1.0;
  EXPECT_THROW(hp.validate(), DomainError);
  hp = {};
  hp.dim = 0;
  EXPECT_THROW(hp.validate(), DomainError);
}

TEST(Reasoner, SelectBranchTiesGoProspective) {
  EXPECT_EQ(select_branch(0.5, 0.5), Direction::prosp);
  EXPECT_EQ(select_branch(0.5000001, 0.5), Direction::retro);
  EXPECT_EQ(select_branch(0.1, 0.5), Direction::prosp);
}

TEST(Reasoner, TraceShape) {
  EpisodeRecord rec = small_episode(1);
  RunResult r = run_episode(rec, small_params(1), small_hp(4));
  ASSERT_EQ(r.trace.size(), 4u);
  EXPECT_EQ(r.final_state.step, 4u);
  EXPECT_EQ(r.initial_weights.size(), 7u);
  for (std::size_t t = 0; t < 4; ++t) {
    const StepTrace& s = r.trace[t];
    EXPECT_EQ(s.step, t + 1);
    EXPECT_EQ(s.srl_weights.size(), 3u);
    EXPECT_EQ(s.retro_weights.size(), 7u);
    EXPECT_EQ(s.focus_before, t == 0 ? r.initial_focus : r.trace[t - 1].focus_after);
    EXPECT_EQ(s.branch, select_branch(s.gate_prob, 0.5));
  }
}

TEST(Reasoner, CandidateWeightsRespectFocus) {
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    EpisodeRecord rec = small_episode(seed, 2 + seed % 9);
    for (const StepTrace& s : run_episode(rec, small_params(seed), small_hp(3)).trace) {
      for (std::size_t i = 0; i < s.retro_weights.size(); ++i) {
        if (i > s.focus_before) EXPECT_EQ(s.retro_weights[i], 0.0);
        if (i < s.focus_before) EXPECT_EQ(s.prosp_weights[i], 0.0);
      }
      EXPECT_EQ(s.focus_after, argmax(s.chosen_weights()));
    }
  }
}

TEST(Reasoner, CoverageAccumulatesStepOverN) {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    EpisodeRecord rec = small_episode(seed);
    const std::size_t steps = 1 + seed % 6;
    RunResult r = run_episode(rec, small_params(seed), small_hp(steps));
    for (const StepTrace& s : r.trace) {
      const double total = std::accumulate(s.coverage.begin(), s.coverage.end(), 0.0);
      EXPECT_NEAR(total, static_cast<double>(s.step) / 3.0, 1e-12);
    }
  }
}

TEST(Reasoner, UnitChiAccumulatesWholeSteps) {
  HyperParams hp = small_hp(5);
  hp.chi_mode = ChiMode::unit;
  RunResult r = run_episode(small_episode(3), small_params(3), hp);
  const auto& c = r.trace.back().coverage;
  EXPECT_NEAR(std::accumulate(c.begin(), c.end(), 0.0), 5.0, 1e-12);
}

TEST(Reasoner, SaturatedGateFixesTheDirection) {
  for (double bias : {20.0, -20.0}) {
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
      ModelParams params = small_params(seed);
      fill(params.at("gate.b"), bias);
      RunResult r = run_episode(small_episode(seed), params, small_hp(4));
      std::size_t previous = r.initial_focus;
      for (const StepTrace& s : r.trace) {
        if (bias > 0) {
          EXPECT_EQ(s.branch, Direction::retro);
          EXPECT_LE(s.focus_after, previous);
        } else {
          EXPECT_EQ(s.branch, Direction::prosp);
          EXPECT_GE(s.focus_after, previous);
        }
        previous = s.focus_after;
      }
    }
  }
}

TEST(Reasoner, UpdateGateInterpolates) {
  EpisodeRecord rec = small_episode(4);
  EpisodeEncoding enc = encode_episode(rec, small_params(4));
  const HyperParams hp = small_hp(1);

  ModelParams closed = small_params(4);
  fill(closed.at("update.bz"), -40.0);
  RunResult kept = run(enc.question, enc.frames, enc.srl, closed, hp);
  ReasoningState start = init_state(enc.question, enc.frames, hp, 3);
  for (std::size_t c = 0; c < 8; ++c) EXPECT_NEAR(kept.hidden.at(0, c), start.hidden.at(0, c), 1e-12);

  ModelParams open = small_params(4);
  fill(open.at("update.bz"), 40.0);
  RunResult replaced = run(enc.question, enc.frames, enc.srl, open, hp);
  for (std::size_t c = 0; c < 8; ++c) EXPECT_LE(std::abs(replaced.hidden.at(0, c)), 1.0);
}

TEST(Reasoner, SingleStepEqualsManualComposition) {
  EpisodeRecord rec = small_episode(5);
  ModelParams params = small_params(5);
  const HyperParams hp = small_hp(1);
  EpisodeEncoding enc = encode_episode(rec, params);

  ReasoningState s = init_state(enc.question, enc.frames, hp, 3);
  AttentionOutput srl = srl_attend(s, enc.srl, params, hp);
  Tensor coverage = update_coverage(s, srl.weights, hp);
  CandidateFrames cand = candidate_frames(s, srl.context, enc.frames, params, hp);
  const Direction branch = select_branch(gate(cand.retro, cand.prosp, params).item(), hp.alpha);
  ReasoningState next = apply_update(s, branch == Direction::retro ? cand.retro : cand.prosp, params);

  RunResult r = run(enc.question, enc.frames, enc.srl, params, hp);
  EXPECT_EQ(testing::values_of(r.hidden), testing::values_of(next.hidden));
  EXPECT_EQ(r.final_state.focus, next.focus);
  EXPECT_EQ(r.trace[0].coverage, testing::values_of(coverage));
  EXPECT_EQ(r.trace[0].branch, branch);
}

TEST(Reasoner, MatchesScalarReference) {
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    EpisodeRecord rec = small_episode(seed, 1 + seed % 5);
    ModelParams params = small_params(seed);
    HyperParams hp = small_hp(1 + seed % 4);
    hp.use_coverage = seed % 3 != 0;
    ForwardResult fwd = forward_episode(rec, params, hp);
    reference::Forward ref = reference::forward(rec, params, hp);
    for (std::size_t k = 0; k < ref.scores.size(); ++k) EXPECT_NEAR(fwd.scores.at(0, k), ref.scores[k], 1e-9);
    Controls c = fwd.reasoning.controls();
    EXPECT_EQ(c.initial_focus, ref.initial_focus);
    EXPECT_EQ(c.branches, ref.branches);
    EXPECT_EQ(c.focus_after, ref.focus_after);
  }
}

TEST(Reasoner, ForcedControlsAreReplayed) {
  EpisodeRecord rec = small_episode(6);
  ModelParams params = small_params(6);
  Controls forced{6, {Direction::retro, Direction::retro, Direction::prosp}, {2, 0, 5}};
  ForwardOptions options;
  options.run.forced = &forced;
  Controls seen = forward_episode(rec, params, small_hp(3), options).reasoning.controls();
  EXPECT_EQ(seen.initial_focus, 6u);
  EXPECT_EQ(seen.branches, forced.branches);
  EXPECT_EQ(seen.focus_after, forced.focus_after);

  forced.branches.pop_back();
  EXPECT_THROW(forward_episode(rec, params, small_hp(3), options), ShapeError);
}

TEST(Reasoner, GateSurrogateKeepsForwardValues) {
  EpisodeRecord rec = small_episode(7);
  ModelParams params = small_params(7);
  ForwardOptions options;
  options.run.gate_surrogate = true;
  EXPECT_EQ(testing::values_of(forward_episode(rec, params, small_hp()).scores),
            testing::values_of(forward_episode(rec, params, small_hp(), options).scores));
}

TEST(Reasoner, CapacityAndShapeErrors) {
  EpisodeRecord rec = small_episode(8);
  HyperParams hp = small_hp();
  hp.max_args = 2;
  ModelParams params = ModelParams::initialize({8, 8, 128, 2}, 8);
  EXPECT_THROW(forward_episode(rec, params, hp), CapacityError);

  hp = small_hp();
  hp.max_frames = 4;
  EXPECT_THROW(forward_episode(rec, small_params(8), hp), CapacityError);

  hp = small_hp();
  hp.dim = 16;
  EXPECT_THROW(forward_episode(rec, small_params(8), hp), ShapeError);
}

}  // namespace
}  // namespace rpr

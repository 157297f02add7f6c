#pragma once

// Multi-step retrospective/prospective reasoning over encoded frames.
//
// Starting from the frame the question attends to most, each step
//   1. attends over the SRL arguments with a query built from the hidden
//      state and the coverage vector,
//   2. adds the normalized SRL weights to the coverage vector,
//   3. forms a frame query from the hidden state and the attended argument
//      and attends twice: once over frames up to the focus (retrospective)
//      and once over frames from the focus on (prospective),
//   4. gates between the two (retrospective iff p > alpha),
//   5. folds the chosen context into the hidden state with a gated update
//      and moves the focus to the chosen branch's most attended frame.
//
// The focus index and the branch are hard choices; gradients flow through the
// hidden state, the attention weights, and the coverage vector.

#include <cstddef>
#include <vector>

#include "rpr/attention.hpp"
#include "rpr/encoders.hpp"
#include "rpr/episode.hpp"
#include "rpr/params.hpp"
#include "rpr/tensor.hpp"

namespace rpr {

enum class ChiMode {
  argument_count,  // chi = N
  unit,            // chi = 1
};

struct HyperParams {
  std::size_t steps = 3;     // T
  double tau = 0.2;          // frame attention temperature
  double srl_tau = 1.0;      // SRL attention temperature
  double alpha = 0.5;        // gate threshold
  ChiMode chi_mode = ChiMode::argument_count;
  std::size_t dim = 64;          // d
  std::size_t max_frames = 64;   // n_max
  std::size_t max_args = 8;      // N_max, coverage padding width
  bool use_coverage = true;      // false feeds a zero coverage vector to the SRL query

  bool operator==(const HyperParams&) const = default;
  /// Throws DomainError on T < 1, tau <= 0, alpha outside (0, 1), and zero widths.
  void validate() const;
};

struct ReasoningState {
  Tensor hidden;          // h_t, 1 x d
  std::size_t focus = 0;  // j
  Tensor coverage;        // C_t, 1 x N
  std::size_t step = 0;   // t
};

struct StepTrace {
  std::size_t step = 0;  // 1-based
  std::vector<double> srl_weights;
  std::vector<double> coverage;  // after this step's update
  std::vector<double> retro_weights;
  std::vector<double> prosp_weights;
  double gate_prob = 0.0;
  Direction branch = Direction::prosp;
  std::size_t focus_before = 0;
  std::size_t focus_after = 0;

  const std::vector<double>& chosen_weights() const {
    return branch == Direction::retro ? retro_weights : prosp_weights;
  }
};

/// Discrete decisions of a run. Replaying them lets finite differences see a
/// smooth function of the parameters.
struct Controls {
  std::size_t initial_focus = 0;
  std::vector<Direction> branches;
  std::vector<std::size_t> focus_after;
};

struct RunOptions {
  /// Adds (p - stopgrad(p)) * (retro - prosp) to the chosen context. The
  /// forward value is unchanged; the gate receives a straight-through gradient
  /// it would otherwise never get. Off for gradient checks.
  bool gate_surrogate = false;
  /// Replays recorded decisions instead of taking argmax / threshold choices.
  const Controls* forced = nullptr;
};

struct RunResult {
  Tensor hidden;  // h_T
  std::size_t initial_focus = 0;
  std::vector<double> initial_weights;
  std::vector<StepTrace> trace;
  ReasoningState final_state;

  Controls controls() const;
};

struct CandidateFrames {
  Tensor query;  // r_t
  AttentionOutput retro;
  AttentionOutput prosp;
};

/// h_0 = Attn(Q', V', V') at temperature tau, j = argmax of its weights,
/// C_0 = 0 (1 x arg_count), t = 0.
ReasoningState init_state(const QuestionEncoding& question, const EncodedFrames& frames,
                          const HyperParams& hp, std::size_t arg_count);
/// Same, also returning the initial attention weights.
ReasoningState init_state(const QuestionEncoding& question, const EncodedFrames& frames,
                          const HyperParams& hp, std::size_t arg_count,
                          std::vector<double>* weights_out);

/// Attention over S' with query [h ; C padded to N_max] W + b. Throws
/// CapacityError when N > N_max.
AttentionOutput srl_attend(const ReasoningState& state, const SrlEncodings& srl,
                           const ModelParams& params, const HyperParams& hp);

/// C_t = C_{t-1} + weights / chi.
Tensor update_coverage(const ReasoningState& state, const Tensor& srl_weights, const HyperParams& hp);

/// r_t = tanh([h ; s_t] W_g + b_g), then masked attention over V' on both
/// sides of the focus.
CandidateFrames candidate_frames(const ReasoningState& state, const Tensor& srl_context,
                                 const EncodedFrames& frames, const ModelParams& params,
                                 const HyperParams& hp);

/// p = sigmoid([retro ; prosp] W_gate + b_gate), 1 x 1.
Tensor gate(const AttentionOutput& retro, const AttentionOutput& prosp, const ModelParams& params);

/// Retrospective iff p > alpha; ties go prospective.
Direction select_branch(double p, double alpha);

/// GRU-style update with z = sigmoid([h ; c] W_z + b_z):
/// h_t = (1 - z) * h + z * tanh([h ; c] W_h + b_h). The focus moves to the
/// argmax of the chosen weights; coverage and step are carried over.
ReasoningState apply_update(const ReasoningState& state, const AttentionOutput& chosen,
                            const ModelParams& params);

/// init_state followed by exactly hp.steps reasoning steps.
RunResult run(const QuestionEncoding& question, const EncodedFrames& frames,
              const SrlEncodings& srl, const ModelParams& params, const HyperParams& hp,
              const RunOptions& options = {});

}  // namespace rpr

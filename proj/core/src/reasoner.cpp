#include "rpr/reasoner.hpp"

#include <string>

#include "rpr/errors.hpp"

namespace rpr {

namespace {

std::vector<double> to_vector(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

void check_width(const Tensor& t, std::size_t d, const char* what) {
  if (!t.defined() || t.cols() != d) {
    throw ShapeError(std::string(what) + ": width " + std::to_string(t.cols()) +
                     " != d " + std::to_string(d));
  }
}

}  // namespace

void HyperParams::validate() const {
  if (steps < 1) throw DomainError("reasoning steps T must be >= 1");
  if (!(tau > 0.0)) throw DomainError("tau must be positive");
  if (!(srl_tau > 0.0)) throw DomainError("SRL tau must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
  if (dim == 0) throw DomainError("model width d must be positive");
  if (max_frames == 0 || max_args == 0) throw DomainError("padding bounds must be positive");
}

Controls RunResult::controls() const {
  Controls c;
  c.initial_focus = initial_focus;
  for (const auto& s : trace) {
    c.branches.push_back(s.branch);
    c.focus_after.push_back(s.focus_after);
  }
  return c;
}

ReasoningState init_state(const QuestionEncoding& question, const EncodedFrames& frames,
                          const HyperParams& hp, std::size_t arg_count) {
  return init_state(question, frames, hp, arg_count, nullptr);
}

ReasoningState init_state(const QuestionEncoding& question, const EncodedFrames& frames,
                          const HyperParams& hp, std::size_t arg_count,
                          std::vector<double>* weights_out) {
  check_width(question.q_prime, hp.dim, "init_state question");
  check_width(frames.v_prime, hp.dim, "init_state frames");
  const std::size_t n = frames.frame_count();
  AttentionOutput att =
      attention(question.q_prime, frames.v_prime, frames.v_prime, hp.tau, MaskSpec::none(n));
  if (weights_out) *weights_out = to_vector(att.weights);
  return {att.context, argmax(att.weights.values()), Tensor::zeros(1, arg_count), 0};
}

AttentionOutput srl_attend(const ReasoningState& state, const SrlEncodings& srl,
                           const ModelParams& params, const HyperParams& hp) {
  const std::size_t n_args = srl.count();
  if (n_args > hp.max_args) {
    throw CapacityError("srl_attend: " + std::to_string(n_args) + " SRL arguments exceed N_max " +
                        std::to_string(hp.max_args));
  }
  check_width(srl.s_prime, hp.dim, "srl_attend arguments");
  if (state.coverage.cols() != n_args) throw ShapeError("srl_attend: coverage width != N");

  std::vector<Tensor> parts{state.hidden};
  if (hp.use_coverage) {
    parts.push_back(state.coverage);
    if (hp.max_args > n_args) parts.push_back(Tensor::zeros(1, hp.max_args - n_args));
  } else {
    parts.push_back(Tensor::zeros(1, hp.max_args));
  }
  Tensor query = add_bias(matmul(concat_cols(parts), params.at("coverage.w")), params.at("coverage.b"));
  return attention(query, srl.s_prime, srl.s_prime, hp.srl_tau, MaskSpec::none(n_args));
}

Tensor update_coverage(const ReasoningState& state, const Tensor& srl_weights, const HyperParams& hp) {
  if (srl_weights.shape() != state.coverage.shape()) {
    throw ShapeError("update_coverage: weights and coverage differ in shape");
  }
  const double chi =
      hp.chi_mode == ChiMode::argument_count ? static_cast<double>(srl_weights.cols()) : 1.0;
  return add(state.coverage, scale(srl_weights, 1.0 / chi));
}

CandidateFrames candidate_frames(const ReasoningState& state, const Tensor& srl_context,
                                 const EncodedFrames& frames, const ModelParams& params,
                                 const HyperParams& hp) {
  const std::size_t n = frames.frame_count();
  if (state.focus >= n) throw DomainError("candidate_frames: focus index out of range");
  Tensor query = tanh(add_bias(matmul(concat_cols({state.hidden, srl_context}), params.at("g.w")),
                               params.at("g.b")));
  CandidateFrames out;
  out.query = query;
  out.retro = attention(query, frames.v_prime, frames.v_prime, hp.tau, MaskSpec::retro(state.focus, n));
  out.prosp = attention(query, frames.v_prime, frames.v_prime, hp.tau, MaskSpec::prosp(state.focus, n));
  return out;
}

Tensor gate(const AttentionOutput& retro, const AttentionOutput& prosp, const ModelParams& params) {
  if (retro.context.cols() != prosp.context.cols()) throw ShapeError("gate: context widths differ");
  return sigmoid(add_bias(matmul(concat_cols({retro.context, prosp.context}), params.at("gate.w")),
                          params.at("gate.b")));
}

Direction select_branch(double p, double alpha) { return p > alpha ? Direction::retro : Direction::prosp; }

ReasoningState apply_update(const ReasoningState& state, const AttentionOutput& chosen,
                            const ModelParams& params) {
  if (chosen.context.cols() != state.hidden.cols()) throw ShapeError("apply_update: context width != d");
  Tensor joint = concat_cols({state.hidden, chosen.context});
  Tensor z = sigmoid(add_bias(matmul(joint, params.at("update.wz")), params.at("update.bz")));
  Tensor proposal = tanh(add_bias(matmul(joint, params.at("update.wh")), params.at("update.bh")));
  Tensor hidden = add(state.hidden, mul(z, sub(proposal, state.hidden)));
  return {hidden, argmax(chosen.weights.values()), state.coverage, state.step + 1};
}

RunResult run(const QuestionEncoding& question, const EncodedFrames& frames,
              const SrlEncodings& srl, const ModelParams& params, const HyperParams& hp,
              const RunOptions& options) {
  hp.validate();
  const std::size_t n = frames.frame_count();
  if (n == 0) throw DomainError("run: no frames");
  if (n > hp.max_frames) {
    throw CapacityError("run: " + std::to_string(n) + " frames exceed n_max " +
                        std::to_string(hp.max_frames));
  }
  const Controls* forced = options.forced;
  if (forced && (forced->branches.size() != hp.steps || forced->focus_after.size() != hp.steps)) {
    throw ShapeError("run: forced controls do not cover every step");
  }

  RunResult result;
  ReasoningState state = init_state(question, frames, hp, srl.count(), &result.initial_weights);
  if (forced) state.focus = forced->initial_focus;
  result.initial_focus = state.focus;

  for (std::size_t t = 0; t < hp.steps; ++t) {
    StepTrace trace;
    trace.step = t + 1;
    trace.focus_before = state.focus;

    AttentionOutput srl_att = srl_attend(state, srl, params, hp);
    Tensor coverage = update_coverage(state, srl_att.weights, hp);
    CandidateFrames cand = candidate_frames(state, srl_att.context, frames, params, hp);
    Tensor p = gate(cand.retro, cand.prosp, params);

    const Direction branch = forced ? forced->branches[t] : select_branch(p.item(), hp.alpha);
    AttentionOutput chosen = branch == Direction::retro ? cand.retro : cand.prosp;
    if (options.gate_surrogate) {
      Tensor straight_through = sub(p, p.detach());
      chosen.context = add(chosen.context,
                           scale_by(sub(cand.retro.context, cand.prosp.context), straight_through));
    }

    ReasoningState next = apply_update(state, chosen, params);
    if (forced) next.focus = forced->focus_after[t];
    next.coverage = coverage;

    trace.srl_weights = to_vector(srl_att.weights);
    trace.coverage = to_vector(coverage);
    trace.retro_weights = to_vector(cand.retro.weights);
    trace.prosp_weights = to_vector(cand.prosp.weights);
    trace.gate_prob = p.item();
    trace.branch = branch;
    trace.focus_after = next.focus;
    result.trace.push_back(std::move(trace));
    state = std::move(next);
  }
  result.hidden = state.hidden;
  result.final_state = state;
  return result;
}

}  // namespace rpr

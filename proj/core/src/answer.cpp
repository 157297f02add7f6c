#include "rpr/answer.hpp"

#include <cmath>
#include <string>

#include "rpr/attention.hpp"
#include "rpr/errors.hpp"

namespace rpr {

Tensor score_answers(const Tensor& hidden, const Tensor& encodings, const ModelParams& params) {
  const Tensor& w = params.at("score.w");
  if (hidden.rows() != 1 || hidden.cols() != w.rows()) throw ShapeError("score_answers: hidden must be 1 x d");
  if (!encodings.defined() || encodings.rows() == 0) throw ShapeError("score_answers: no answer encodings");
  if (encodings.cols() != w.cols()) throw ShapeError("score_answers: answer width != d");
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(w.rows()));
  return scale(matmul(matmul(hidden, w), transpose(encodings)), inv_sqrt_d);
}

std::size_t predict(const Tensor& scores) { return argmax(scores.values()); }

Tensor loss_multi(const Tensor& scores, std::size_t label) {
  if (scores.rows() != 1) throw ShapeError("loss_multi: scores must be a row");
  if (label >= scores.cols()) {
    throw DomainError("loss_multi: label " + std::to_string(label) + " outside " +
                      std::to_string(scores.cols()) + " options");
  }
  return sub(logsumexp(scores), pick(scores, 0, label));
}

Tensor loss_binary(const Tensor& score, bool is_correct) {
  if (score.numel() != 1) throw ShapeError("loss_binary: score must be 1 x 1");
  return softplus(is_correct ? scale(score, -1.0) : score);
}

}  // namespace rpr

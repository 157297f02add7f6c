#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rpr/episode.hpp"
#include "rpr/params.hpp"
#include "rpr/tensor.hpp"

namespace rpr {

struct AnswerSet {
  std::vector<AnswerOption> options;
  Tensor encodings;  // M x d
  std::size_t label = 0;
};

/// score_k = (h W_a a_k) / sqrt(d), returned as 1 x M.
Tensor score_answers(const Tensor& hidden, const Tensor& encodings, const ModelParams& params);
inline Tensor score_answers(const Tensor& hidden, const AnswerSet& answers, const ModelParams& params) {
  return score_answers(hidden, answers.encodings, params);
}

/// Argmax of the scores, lowest index on ties.
std::size_t predict(const Tensor& scores);

/// -log softmax(scores)_label.
Tensor loss_multi(const Tensor& scores, std::size_t label);

/// -log sigmoid(s) when correct, -log(1 - sigmoid(s)) otherwise.
Tensor loss_binary(const Tensor& score, bool is_correct);

}  // namespace rpr

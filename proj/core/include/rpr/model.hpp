#pragma once

#include <cstddef>

#include "rpr/encoders.hpp"
#include "rpr/episode.hpp"
#include "rpr/params.hpp"
#include "rpr/reasoner.hpp"
#include "rpr/tensor.hpp"

namespace rpr {

struct ForwardOptions {
  RunOptions run;
  EncoderOptions encoder;
};

struct ForwardResult {
  EpisodeEncoding encoding;
  RunResult reasoning;
  Tensor scores;  // 1 x M
  std::size_t prediction = 0;
};

/// Encodes the record (precomputed embeddings when present), runs the reasoner
/// and scores every answer option against h_T.
ForwardResult forward_episode(const EpisodeRecord& record, const ModelParams& params,
                              const HyperParams& hp, const ForwardOptions& options = {});

/// Throws ShapeError when the parameters were built for a different d or
/// N_max than the hyperparameters describe.
void check_compatible(const ModelParams& params, const HyperParams& hp);

}  // namespace rpr

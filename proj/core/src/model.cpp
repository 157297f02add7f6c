#include "rpr/model.hpp"

#include <string>

#include "rpr/answer.hpp"
#include "rpr/errors.hpp"

namespace rpr {

void check_compatible(const ModelParams& params, const HyperParams& hp) {
  const auto& cfg = params.config();
  if (cfg.dim != hp.dim) {
    throw ShapeError("parameters have d=" + std::to_string(cfg.dim) + " but d=" +
                     std::to_string(hp.dim) + " was requested");
  }
  if (cfg.max_args != hp.max_args) {
    throw ShapeError("parameters have N_max=" + std::to_string(cfg.max_args) + " but N_max=" +
                     std::to_string(hp.max_args) + " was requested");
  }
}

ForwardResult forward_episode(const EpisodeRecord& record, const ModelParams& params,
                              const HyperParams& hp, const ForwardOptions& options) {
  check_compatible(params, hp);
  ForwardResult out;
  out.encoding = record.embeddings ? ingest_embeddings(record, params, options.encoder)
                                   : encode_episode(record, params, options.encoder);
  out.reasoning = run(out.encoding.question, out.encoding.frames, out.encoding.srl, params, hp, options.run);
  out.scores = score_answers(out.reasoning.hidden, out.encoding.answers, params);
  out.prediction = predict(out.scores);
  return out;
}

}  // namespace rpr

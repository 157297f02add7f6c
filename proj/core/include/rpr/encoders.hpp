#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rpr/episode.hpp"
#include "rpr/params.hpp"
#include "rpr/tensor.hpp"

namespace rpr {

/// Raw per-frame feature vectors, n x d_in, rows in temporal order.
struct FrameBank {
  Tensor raw;
  std::size_t frame_count() const { return raw.rows(); }
};

/// Temporal-aware frame representations V', n x d.
struct EncodedFrames {
  Tensor v_prime;
  std::size_t frame_count() const { return v_prime.rows(); }
};

/// Question representation Q', 1 x d.
struct QuestionEncoding {
  Tensor q_prime;
  std::size_t token_count = 0;
};

/// One row of S' per SRL argument, N x d.
struct SrlEncodings {
  Tensor s_prime;
  std::vector<std::string> tags;
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  std::size_t count() const { return s_prime.rows(); }
};

struct EncoderOptions {
  /// Test hook: without position encodings the frame encoder is permutation
  /// equivariant.
  bool position_encoding = true;
};

/// Sinusoidal position table, n x d: sin on even columns, cos on odd ones.
Tensor sinusoidal_positions(std::size_t n, std::size_t d);

/// Projects frames to width d, adds position encodings, then applies one
/// self-attention pass (tau = 1, unmasked). Each frame receives the
/// attention-weighted difference between the other frames' value projections
/// and its own, V' = P + (A - I) P Wv, so a single frame passes through as P.
EncodedFrames encode_frames(const FrameBank& bank, const ModelParams& params,
                            const EncoderOptions& options = {});

/// Mean of token embeddings followed by the question projection.
QuestionEncoding encode_question(std::span<const std::size_t> tokens, const ModelParams& params);

/// Row i: (mean of token embeddings over span i + tag embedding) projected to d.
/// The null tag "O" adds nothing. Spans are inclusive.
SrlEncodings encode_srl(std::span<const std::size_t> tokens, std::span<const SrlArgument> args,
                        const ModelParams& params);

/// Answer options through the shared token embeddings and the answer
/// projection, M x d.
Tensor encode_answers(std::span<const AnswerOption> answers, const ModelParams& params);

struct EpisodeEncoding {
  EncodedFrames frames;
  QuestionEncoding question;
  SrlEncodings srl;
  Tensor answers;  // M x d
};

/// Encodes a record with the toy text encoders and the frame encoder.
EpisodeEncoding encode_episode(const EpisodeRecord& record, const ModelParams& params,
                               const EncoderOptions& options = {});

/// Uses the record's precomputed question / SRL / answer vectors as-is. Frames
/// still go through encode_frames so V' is always temporal-aware. Answers fall
/// back to the text encoder when no answer vectors are present. Throws
/// FormatError naming the missing field or mismatched width.
EpisodeEncoding ingest_embeddings(const EpisodeRecord& record, const ModelParams& params,
                                  const EncoderOptions& options = {});

}  // namespace rpr

#include "rpr/encoders.hpp"

#include <cmath>
#include <string>

#include "rpr/errors.hpp"

namespace rpr {

namespace {

Tensor linear(const Tensor& x, const ModelParams& p, const char* w, const char* b) {
  return add_bias(matmul(x, p.at(w)), p.at(b));
}

void check_tokens(std::span<const std::size_t> tokens, std::size_t vocab, const char* what) {
  if (tokens.empty()) throw DomainError(std::string(what) + ": empty token sequence");
  for (std::size_t t : tokens) {
    if (t >= vocab) {
      throw DomainError(std::string(what) + ": token id " + std::to_string(t) +
                        " outside vocabulary of " + std::to_string(vocab));
    }
  }
}

Tensor mean_embedding(std::span<const std::size_t> tokens, const ModelParams& p) {
  return mean_rows(gather_rows(p.at("embed.token"), tokens));
}

}  // namespace

Tensor sinusoidal_positions(std::size_t n, std::size_t d) {
  std::vector<double> pe(n * d);
  for (std::size_t pos = 0; pos < n; ++pos) {
    for (std::size_t i = 0; i < d; ++i) {
      const double rate = std::pow(10000.0, -static_cast<double>(i - i % 2) / static_cast<double>(d));
      const double angle = static_cast<double>(pos) * rate;
      pe[pos * d + i] = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return Tensor(n, d, std::move(pe));
}

EncodedFrames encode_frames(const FrameBank& bank, const ModelParams& params,
                            const EncoderOptions& options) {
  const std::size_t n = bank.frame_count();
  if (n == 0) throw DomainError("encode_frames: no frames");
  const auto& cfg = params.config();
  if (bank.raw.cols() != cfg.input_dim) {
    throw ShapeError("encode_frames: frame width " + std::to_string(bank.raw.cols()) +
                     " != configured d_in " + std::to_string(cfg.input_dim));
  }
  Tensor projected = linear(bank.raw, params, "frame.w", "frame.b");
  if (options.position_encoding) projected = add(projected, sinusoidal_positions(n, cfg.dim));

  Tensor queries = matmul(projected, params.at("temporal.wq"));
  Tensor keys = matmul(projected, params.at("temporal.wk"));
  Tensor values = matmul(projected, params.at("temporal.wv"));
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(cfg.dim));
  Tensor mixing = softmax_rows(scale(matmul(queries, transpose(keys)), inv_sqrt_d), 1.0);
  Tensor context = sub(matmul(mixing, values), values);
  return {add(projected, context)};
}

QuestionEncoding encode_question(std::span<const std::size_t> tokens, const ModelParams& params) {
  check_tokens(tokens, params.config().vocab, "encode_question");
  return {linear(mean_embedding(tokens, params), params, "question.w", "question.b"), tokens.size()};
}

SrlEncodings encode_srl(std::span<const std::size_t> tokens, std::span<const SrlArgument> args,
                        const ModelParams& params) {
  check_tokens(tokens, params.config().vocab, "encode_srl");
  if (args.empty()) throw DomainError("encode_srl: at least one SRL argument is required");
  SrlEncodings out;
  std::vector<Tensor> rows;
  rows.reserve(args.size());
  for (const auto& arg : args) {
    if (arg.start > arg.end) throw DomainError("encode_srl: empty span for tag " + arg.tag);
    if (arg.end >= tokens.size()) {
      throw DomainError("encode_srl: span [" + std::to_string(arg.start) + "," +
                        std::to_string(arg.end) + "] outside " + std::to_string(tokens.size()) +
                        " question tokens");
    }
    auto tag = srl_tag_index(arg.tag);
    if (!tag) throw DomainError("encode_srl: unknown SRL tag '" + arg.tag + "'");
    Tensor row = mean_embedding(tokens.subspan(arg.start, arg.end - arg.start + 1), params);
    if (*tag != kNullTag) row = add(row, slice_row(params.at("embed.tag"), *tag));
    rows.push_back(row);
    out.tags.push_back(arg.tag);
    out.spans.emplace_back(arg.start, arg.end);
  }
  out.s_prime = linear(concat_rows(rows), params, "srl.w", "srl.b");
  return out;
}

Tensor encode_answers(std::span<const AnswerOption> answers, const ModelParams& params) {
  if (answers.empty()) throw DomainError("encode_answers: no answer options");
  std::vector<Tensor> rows;
  rows.reserve(answers.size());
  for (const auto& a : answers) {
    check_tokens(a.tokens, params.config().vocab, "encode_answers");
    rows.push_back(mean_embedding(a.tokens, params));
  }
  return linear(concat_rows(rows), params, "answer.w", "answer.b");
}

EpisodeEncoding encode_episode(const EpisodeRecord& record, const ModelParams& params,
                               const EncoderOptions& options) {
  EpisodeEncoding enc;
  enc.frames = encode_frames({Tensor::from_rows(record.frames)}, params, options);
  enc.question = encode_question(record.question_tokens, params);
  enc.srl = encode_srl(record.question_tokens, record.srl, params);
  enc.answers = encode_answers(record.answers, params);
  return enc;
}

EpisodeEncoding ingest_embeddings(const EpisodeRecord& record, const ModelParams& params,
                                  const EncoderOptions& options) {
  const auto& cfg = params.config();
  if (record.frames.empty()) throw FormatError("episode " + record.id + ": missing field 'frames'");
  for (const auto& f : record.frames) {
    if (f.size() != cfg.input_dim) {
      throw FormatError("episode " + record.id + ": frame width " + std::to_string(f.size()) +
                        " != d_in " + std::to_string(cfg.input_dim));
    }
  }
  if (!record.embeddings) throw FormatError("episode " + record.id + ": missing field 'embeddings'");
  const auto& emb = *record.embeddings;
  if (emb.question.empty()) {
    throw FormatError("episode " + record.id + ": missing field 'embeddings.question'");
  }
  if (emb.srl.empty()) throw FormatError("episode " + record.id + ": missing field 'embeddings.srl'");
  auto check_width = [&](const std::vector<double>& v, const char* field) {
    if (v.size() != cfg.dim) {
      throw FormatError("episode " + record.id + ": '" + field + "' width " +
                        std::to_string(v.size()) + " != d " + std::to_string(cfg.dim));
    }
  };
  check_width(emb.question, "embeddings.question");
  for (const auto& r : emb.srl) check_width(r, "embeddings.srl");
  for (const auto& r : emb.answers) check_width(r, "embeddings.answers");
  if (!record.srl.empty() && record.srl.size() != emb.srl.size()) {
    throw FormatError("episode " + record.id + ": 'embeddings.srl' has " +
                      std::to_string(emb.srl.size()) + " rows for " +
                      std::to_string(record.srl.size()) + " SRL arguments");
  }

  EpisodeEncoding enc;
  enc.frames = encode_frames({Tensor::from_rows(record.frames)}, params, options);
  enc.question = {Tensor::row(emb.question), record.question_tokens.size()};
  enc.srl.s_prime = Tensor::from_rows(emb.srl);
  for (const auto& arg : record.srl) {
    enc.srl.tags.push_back(arg.tag);
    enc.srl.spans.emplace_back(arg.start, arg.end);
  }
  if (!emb.answers.empty()) {
    enc.answers = Tensor::from_rows(emb.answers);
  } else {
    if (record.answers.empty()) throw FormatError("episode " + record.id + ": missing field 'answers'");
    enc.answers = encode_answers(record.answers, params);
  }
  return enc;
}

}  // namespace rpr

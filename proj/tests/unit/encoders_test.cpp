#include <gtest/gtest.h>

#include <cmath>

#include "rpr/answer.hpp"
#include "rpr/encoders.hpp"
#include "rpr/errors.hpp"
#include "rpr/model.hpp"
#include "test_support.hpp"

namespace rpr {
namespace {

using testing::random_tensor;
using testing::small_episode;
using testing::small_params;

Tensor permute_rows(const Tensor& t, const std::vector<std::size_t>& order) {
  std::vector<std::vector<double>> rows;
  for (std::size_t r : order) rows.push_back(t.row_values(r));
  return Tensor::from_rows(rows);
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) worst = std::max(worst, std::abs(a.values()[i] - b.values()[i]));
  return worst;
}

TEST(Positions, SinOnEvenCosOnOdd) {
  Tensor pe = sinusoidal_positions(3, 4);
  EXPECT_EQ(pe.row_values(0), (std::vector<double>{0.0, 1.0, 0.0, 1.0}));
  EXPECT_DOUBLE_EQ(pe.at(1, 0), std::sin(1.0));
  EXPECT_DOUBLE_EQ(pe.at(1, 1), std::cos(1.0));
  EXPECT_DOUBLE_EQ(pe.at(2, 2), std::sin(2.0 / 100.0));
  EXPECT_DOUBLE_EQ(pe.at(2, 3), std::cos(2.0 / 100.0));
}

TEST(FrameEncoder, SingleFramePassesThroughProjection) {
  ModelParams params = small_params(1);
  std::mt19937_64 rng(1);
  Tensor raw = random_tensor(1, 8, rng);
  Tensor expected = add(add_bias(matmul(raw, params.at("frame.w")), params.at("frame.b")),
                        sinusoidal_positions(1, 8));
  EXPECT_LT(max_abs_diff(encode_frames({raw}, params).v_prime, expected), 1e-14);
}

TEST(FrameEncoder, EquivariantWithoutPositionsOnly) {
  ModelParams params = small_params(2);
  std::mt19937_64 rng(2);
  Tensor raw = random_tensor(6, 8, rng);
  const std::vector<std::size_t> order{3, 0, 5, 1, 4, 2};

  EncoderOptions plain{.position_encoding = false};
  Tensor direct = permute_rows(encode_frames({raw}, params, plain).v_prime, order);
  Tensor shuffled = encode_frames({permute_rows(raw, order)}, params, plain).v_prime;
  EXPECT_LT(max_abs_diff(direct, shuffled), 1e-12);

  Tensor direct_pe = permute_rows(encode_frames({raw}, params).v_prime, order);
  Tensor shuffled_pe = encode_frames({permute_rows(raw, order)}, params).v_prime;
  EXPECT_GT(max_abs_diff(direct_pe, shuffled_pe), 1e-3);
}

TEST(FrameEncoder, Errors) {
  ModelParams params = small_params(3);
  std::mt19937_64 rng(3);
  EXPECT_THROW(encode_frames({random_tensor(4, 9, rng)}, params), ShapeError);
  EXPECT_THROW(encode_frames({Tensor()}, params), std::exception);
}

TEST(TextEncoders, UntaggedFullSpanMatchesQuestionUnderSharedProjection) {
  ModelParams params = small_params(4);
  auto sw = params.at("srl.w").mutable_values();
  auto sb = params.at("srl.b").mutable_values();
  std::copy(params.at("question.w").values().begin(), params.at("question.w").values().end(), sw.begin());
  std::copy(params.at("question.b").values().begin(), params.at("question.b").values().end(), sb.begin());

  const std::vector<std::size_t> tokens{3, 9, 27, 81};
  const std::vector<SrlArgument> args{{"O", 0, 3}, {"ARG0", 0, 3}};
  SrlEncodings srl = encode_srl(tokens, args, params);
  QuestionEncoding q = encode_question(tokens, params);
  EXPECT_EQ(q.token_count, 4u);
  for (std::size_t c = 0; c < 8; ++c) EXPECT_NEAR(srl.s_prime.at(0, c), q.q_prime.at(0, c), 1e-14);
  // A real tag adds its embedding, so the row differs.
  EXPECT_GT(max_abs_diff(slice_row(srl.s_prime, 1), q.q_prime), 1e-6);
  EXPECT_EQ(srl.tags, (std::vector<std::string>{"O", "ARG0"}));
  EXPECT_EQ(srl.spans[1], (std::pair<std::size_t, std::size_t>{0, 3}));
}

TEST(TextEncoders, Errors) {
  ModelParams params = small_params(5);
  const std::vector<std::size_t> tokens{1, 2, 3};
  EXPECT_THROW(encode_question(std::vector<std::size_t>{}, params), DomainError);
  EXPECT_THROW(encode_question(std::vector<std::size_t>{128}, params), DomainError);
  EXPECT_THROW(encode_srl(tokens, std::vector<SrlArgument>{{"ARG0", 1, 3}}, params), DomainError);
  EXPECT_THROW(encode_srl(tokens, std::vector<SrlArgument>{{"ARG0", 2, 1}}, params), DomainError);
  EXPECT_THROW(encode_srl(tokens, std::vector<SrlArgument>{{"NOPE", 0, 0}}, params), DomainError);
  EXPECT_THROW(encode_srl(tokens, std::vector<SrlArgument>{}, params), DomainError);
  EXPECT_THROW(encode_answers(std::vector<AnswerOption>{}, params), DomainError);
}

TEST(TextEncoders, EpisodeShapes) {
  EpisodeEncoding enc = encode_episode(small_episode(6), small_params(6));
  EXPECT_EQ(enc.frames.v_prime.shape(), (Shape{7, 8}));
  EXPECT_EQ(enc.question.q_prime.shape(), (Shape{1, 8}));
  EXPECT_EQ(enc.srl.s_prime.shape(), (Shape{3, 8}));
  EXPECT_EQ(enc.answers.shape(), (Shape{4, 8}));
}

TEST(TextEncoders, GradientsReachEveryParameter) {
  EpisodeRecord record = small_episode(7);
  ModelParams params = small_params(7);
  ForwardOptions options;
  options.run.gate_surrogate = true;
  ForwardResult fwd = forward_episode(record, params, testing::small_hp(), options);
  backward(add(loss_multi(fwd.scores, record.label), loss_binary(pick(fwd.scores, 0, 0), record.label == 0)));
  for (const auto& [name, t] : params.tensors()) {
    ASSERT_TRUE(t.has_grad()) << name;
    double norm = 0.0;
    for (double g : t.grad()) norm += g * g;
    EXPECT_GT(norm, 0.0) << name;
  }
}

TEST(Ingest, UsesPrecomputedVectors) {
  EpisodeRecord record = small_episode(8);
  ModelParams params = small_params(8);
  PrecomputedEmbeddings emb;
  emb.question.assign(8, 0.25);
  emb.srl.assign(3, std::vector<double>(8, -0.5));
  record.embeddings = emb;
  EpisodeEncoding enc = ingest_embeddings(record, params);
  EXPECT_EQ(enc.question.q_prime.row_values(0), emb.question);
  EXPECT_EQ(enc.srl.s_prime.row_values(2), emb.srl[2]);
  EXPECT_EQ(enc.answers.shape(), (Shape{4, 8}));
  EXPECT_EQ(enc.srl.tags.size(), 3u);
}

TEST(Ingest, ReportsMissingAndMismatchedFields) {
  ModelParams params = small_params(9);
  EpisodeRecord record = small_episode(9);
  EXPECT_THROW(ingest_embeddings(record, params), FormatError);

  record.embeddings = PrecomputedEmbeddings{std::vector<double>(8, 0.0), {}, {}};
  EXPECT_THROW(ingest_embeddings(record, params), FormatError);

  record.embeddings = PrecomputedEmbeddings{std::vector<double>(7, 0.0), {std::vector<double>(8, 0.0)}, {}};
  EXPECT_THROW(ingest_embeddings(record, params), FormatError);

  record.embeddings = PrecomputedEmbeddings{std::vector<double>(8, 0.0), {std::vector<double>(8, 0.0)}, {}};
  EXPECT_THROW(ingest_embeddings(record, params), FormatError);  // 1 row for 3 arguments
}

}  // namespace
}  // namespace rpr

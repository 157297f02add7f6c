#include <gtest/gtest.h>

#include <cmath>

#include "rpr/attention.hpp"
#include "rpr/errors.hpp"
#include "test_support.hpp"

namespace rpr {
namespace {

using testing::random_tensor;
using testing::values_of;

// Brute-force scalar attention, written independently of the library.
struct ScalarAttention {
  std::vector<double> weights, context;
};

ScalarAttention scalar_attention(const std::vector<double>& q, const std::vector<std::vector<double>>& k,
                                 const std::vector<std::vector<double>>& v, double tau, const MaskSpec& mask) {
  const std::size_t n = k.size(), d = q.size();
  std::vector<double> logits(n);
  double best = -INFINITY;
  for (std::size_t i = 0; i < n; ++i) {
    double dot = 0.0;
    for (std::size_t c = 0; c < d; ++c) dot += q[c] * k[i][c];
    logits[i] = dot / std::sqrt(static_cast<double>(d)) / tau;
    if (mask.admits(i)) best = std::max(best, logits[i]);
  }
  ScalarAttention out{std::vector<double>(n, 0.0), std::vector<double>(v[0].size(), 0.0)};
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask.admits(i)) continue;
    out.weights[i] = std::exp(logits[i] - best);
    total += out.weights[i];
  }
  for (std::size_t i = 0; i < n; ++i) {
    out.weights[i] /= total;
    for (std::size_t c = 0; c < v[i].size(); ++c) out.context[c] += out.weights[i] * v[i][c];
  }
  return out;
}

std::vector<std::vector<double>> rows_of(const Tensor& t) {
  std::vector<std::vector<double>> out;
  for (std::size_t r = 0; r < t.rows(); ++r) out.push_back(t.row_values(r));
  return out;
}

TEST(MaskSpec, AdmittedSets) {
  const MaskSpec r = MaskSpec::retro(2, 5), p = MaskSpec::prosp(2, 5);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(r.admits(i), i <= 2);
    EXPECT_EQ(p.admits(i), i >= 2);
  }
  for (std::size_t j = 0; j < 5; ++j) {
    EXPECT_GE(MaskSpec::retro(j, 5).admitted_count(), 1u);
    EXPECT_GE(MaskSpec::prosp(j, 5).admitted_count(), 1u);
  }
}

TEST(Softmax, UniformLogits) {
  Tensor w = softmax_with_temperature(Tensor::row({0.0, 0.0, 0.0}), 1.0, MaskSpec::none(3));
  for (double x : w.values()) EXPECT_NEAR(x, 1.0 / 3.0, 1e-15);
}

TEST(Softmax, LowTemperatureTwoLogits) {
  // 1 / (1 + e^-5) and its complement, evaluated at 30 digits.
  Tensor w = softmax_with_temperature(Tensor::row({1.0, 0.0}), 0.2, MaskSpec::none(2));
  EXPECT_NEAR(w.at(0, 0), 0.99330714907571514, 1e-15);
  EXPECT_NEAR(w.at(0, 1), 0.0066928509242848556, 1e-15);
}

TEST(Softmax, MaskedPositionsAreExactlyZero) {
  // Admitted logits 2 and 1 give sigmoid(1) and its complement; the masked 5
  // must not leak in.
  Tensor w = softmax_with_temperature(Tensor::row({2.0, 1.0, 5.0}), 1.0, MaskSpec::retro(1, 3));
  EXPECT_NEAR(w.at(0, 0), 0.73105857863000488, 1e-15);
  EXPECT_NEAR(w.at(0, 1), 0.26894142136999512, 1e-15);
  EXPECT_EQ(w.at(0, 2), 0.0);
}

TEST(Softmax, Errors) {
  EXPECT_THROW(softmax_with_temperature(Tensor::row({1.0}), 0.0, MaskSpec::none(1)), DomainError);
  EXPECT_THROW(softmax_with_temperature(Tensor::row({1.0}), -1.0, MaskSpec::none(1)), DomainError);
  EXPECT_THROW(softmax_with_temperature(Tensor::row({1.0, 2.0}), 1.0, MaskSpec::none(3)), ShapeError);
  EXPECT_THROW(softmax_with_temperature(Tensor::row({1.0, 2.0}), 1.0, MaskSpec::retro(5, 2)), DomainError);
}

TEST(Softmax, FuzzedWeightsSumToOneAndRespectMasks) {
  std::mt19937_64 rng(20);
  for (int c = 0; c < 1000; ++c) {
    const std::size_t n = 1 + rng() % 12;
    const std::size_t j = rng() % n;
    const MaskSpec masks[] = {MaskSpec::none(n), MaskSpec::retro(j, n), MaskSpec::prosp(j, n)};
    const MaskSpec& mask = masks[rng() % 3];
    const double tau = 0.01 + 5.0 * uniform01(rng);
    Tensor w = softmax_with_temperature(random_tensor(1, n, rng, 100.0), tau, mask);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = w.at(0, i);
      if (mask.admits(i)) {
        EXPECT_GE(x, 0.0);
        total += x;
      } else {
        EXPECT_EQ(x, 0.0);
      }
    }
    EXPECT_NEAR(total, 1.0, 1e-9);
  }
}

TEST(Softmax, LowerTemperatureSharpensTheMaximum) {
  std::mt19937_64 rng(21);
  for (int c = 0; c < 100; ++c) {
    Tensor logits = random_tensor(1, 6, rng, 2.0);
    const std::size_t top = argmax(logits.values());
    double previous = 2.0;
    for (double tau : {0.1, 0.2, 0.5, 1.0, 2.0}) {
      const double w = softmax_with_temperature(logits, tau, MaskSpec::none(6)).at(0, top);
      EXPECT_LE(w, previous);
      previous = w;
    }
  }
}

TEST(Softmax, ArgmaxMatchesLogitsOverAdmittedPositions) {
  std::mt19937_64 rng(22);
  for (int c = 0; c < 200; ++c) {
    const std::size_t n = 2 + rng() % 8;
    const MaskSpec mask = MaskSpec::prosp(rng() % n, n);
    Tensor logits = random_tensor(1, n, rng, 3.0);
    std::size_t best = mask.focus;
    for (std::size_t i = mask.focus; i < n; ++i) {
      if (logits.at(0, i) > logits.at(0, best)) best = i;
    }
    const double tau = 0.05 + uniform01(rng);
    EXPECT_EQ(argmax(softmax_with_temperature(logits, tau, mask).values()), best);
  }
}

TEST(Argmax, LowestIndexWinsTies) {
  const std::vector<double> v{1.0, 3.0, 3.0, 2.0};
  EXPECT_EQ(argmax(v), 1u);
}

TEST(Attention, SingleRowReturnsIt) {
  std::mt19937_64 rng(1);
  Tensor q = random_tensor(1, 4, rng), k = random_tensor(1, 4, rng), v = random_tensor(1, 4, rng);
  AttentionOutput o = attention(q, k, v, 0.2, MaskSpec::none(1));
  EXPECT_EQ(values_of(o.context), values_of(v));
  EXPECT_EQ(o.weights.at(0, 0), 1.0);
}

TEST(Attention, SharpTwoKeyExample) {
  Tensor q = Tensor::row({1.0, 0.0});
  Tensor keys(2, 2, {10, 0, 0, 10});
  Tensor values(2, 2, {1, 0, 0, 1});
  AttentionOutput o = attention(q, keys, values, 0.2, MaskSpec::none(2));
  // Second weight is exp(-(10/sqrt 2)/0.2) = exp(-35.355...), from mpmath.
  EXPECT_NEAR(o.weights.at(0, 1), 4.4194817079858e-16, 1e-28);
  EXPECT_NEAR(o.weights.at(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(o.context.at(0, 0), 1.0, 1e-6);
  EXPECT_NEAR(o.context.at(0, 1), 0.0, 1e-6);
}

TEST(Attention, RetroMaskZeroesLaterFrames) {
  std::mt19937_64 rng(2);
  for (int c = 0; c < 100; ++c) {
    const std::size_t n = 1 + rng() % 8, j = rng() % n;
    Tensor kv = random_tensor(n, 4, rng, 3.0);
    AttentionOutput o = attention(random_tensor(1, 4, rng, 3.0), kv, kv, 0.2, MaskSpec::retro(j, n));
    for (std::size_t i = j + 1; i < n; ++i) EXPECT_EQ(o.weights.at(0, i), 0.0);
  }
}

TEST(Attention, MatchesBruteForceScalarImplementation) {
  std::mt19937_64 rng(3);
  for (int c = 0; c < 200; ++c) {
    const std::size_t n = 1 + rng() % 5, d = 1 + rng() % 8, j = rng() % n;
    const MaskSpec masks[] = {MaskSpec::none(n), MaskSpec::retro(j, n), MaskSpec::prosp(j, n)};
    const MaskSpec& mask = masks[c % 3];
    Tensor q = random_tensor(1, d, rng, 2.0), k = random_tensor(n, d, rng, 2.0), v = random_tensor(n, d, rng, 2.0);
    const double tau = 0.1 + uniform01(rng);
    AttentionOutput o = attention(q, k, v, tau, mask);
    ScalarAttention ref = scalar_attention(q.row_values(0), rows_of(k), rows_of(v), tau, mask);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(o.weights.at(0, i), ref.weights[i], 1e-9);
    for (std::size_t i = 0; i < d; ++i) EXPECT_NEAR(o.context.at(0, i), ref.context[i], 1e-9);
  }
}

TEST(Attention, ShapeMismatch) {
  std::mt19937_64 rng(4);
  EXPECT_THROW(attention(random_tensor(1, 3, rng), random_tensor(2, 4, rng), random_tensor(2, 4, rng), 1.0,
                         MaskSpec::none(2)),
               ShapeError);
  EXPECT_THROW(attention(random_tensor(1, 4, rng), random_tensor(2, 4, rng), random_tensor(3, 4, rng), 1.0,
                         MaskSpec::none(2)),
               ShapeError);
}

}  // namespace
}  // namespace rpr

#include <gtest/gtest.h>

#include "rpr/errors.hpp"
#include "rpr/answer.hpp"
#include "rpr/grad_check.hpp"
#include "rpr/model.hpp"
#include "rpr_cli/grad_suites.hpp"
#include "test_support.hpp"

namespace rpr {
namespace {

TEST(GradCheck, ExactOnPolynomial) {
  Tensor x = Tensor::row({0.5, -1.5, 2.0}, true);
  auto f = [&] { return sum(mul(mul(x, x), x)); };
  GradCheckReport report = grad_check(f, {{"x", x}}, 1e-6);
  ASSERT_EQ(report.entries.size(), 1u);
  EXPECT_LT(report.max_rel_error(), 1e-8);
  // grad() holds the analytic gradient afterwards: 3x^2.
  EXPECT_NEAR(x.grad()[2], 12.0, 1e-12);
  EXPECT_EQ(x.values()[0], 0.5);
}

TEST(GradCheck, DetectsWrongBackwardRule) {
  // Forward is x^2 but the recorded rule claims 3x.
  Tensor x = Tensor::scalar(1.5, true);
  auto broken_square = [&] {
    const double v = x.item();
    return detail::make_result({1, 1}, {v * v}, {x}, [](const detail::Node& self) {
      if (auto* g = detail::grad_of(self, 0)) (*g)[0] += self.grad[0] * 3.0 * self.parents[0]->value[0];
    });
  };
  GradCheckReport report = grad_check(broken_square, {{"x", x}}, 1e-6);
  EXPECT_NEAR(report.max_rel_error(), 1.0 / 3.0, 1e-6);
  EXPECT_EQ(report.worst()->name, "x");
  EXPECT_FALSE(report.passed(1e-4));
}

TEST(GradCheck, RejectsBadInputs) {
  Tensor x = Tensor::scalar(1.0, true);
  EXPECT_THROW(grad_check([&] { return mul(x, x); }, {{"x", x}}, 0.0), DomainError);
  EXPECT_THROW(grad_check([&] { return scale(x, INFINITY); }, {{"x", x}}, 1e-6), DomainError);
}

TEST(GradCheck, EveryPrimitivePasses) {
  for (const auto& component : cli::op_suite(5)) {
    EXPECT_LT(component.report.max_rel_error(), cli::kGradTolerance) << component.component;
  }
}

TEST(GradCheck, EndToEndAgreesToTheRoundoffFloor) {
  // Central differences at eps 1e-6 carry about 1e-10 absolute roundoff, so
  // elements with gradients near 1e-7 are compared absolutely.
  for (std::uint64_t seed : {1, 2, 3}) {
    cli::EndToEndProblem p = cli::end_to_end_problem(seed);
    Controls controls = forward_episode(p.episode, p.params, p.hp).reasoning.controls();
    ForwardOptions options;
    options.run.forced = &controls;
    auto loss = [&] { return loss_multi(forward_episode(p.episode, p.params, p.hp, options).scores, p.episode.label); };
    p.params.zero_grad();
    backward(loss());
    for (auto& [name, t] : p.params.named()) {
      const std::vector<double> analytic(t.grad().begin(), t.grad().end());
      auto values = t.mutable_values();
      for (std::size_t i = 0; i < values.size(); ++i) {
        const double saved = values[i];
        values[i] = saved + cli::kGradEps;
        const double up = loss().item();
        values[i] = saved - cli::kGradEps;
        const double down = loss().item();
        values[i] = saved;
        const double numeric = (up - down) / (2.0 * cli::kGradEps);
        const double bound = 1e-4 * std::max(std::abs(analytic[i]), std::abs(numeric)) + 1e-9;
        ASSERT_LE(std::abs(analytic[i] - numeric), bound) << "seed " << seed << " " << name << "[" << i << "]";
      }
    }
  }
}

TEST(GradCheck, EndToEndCoversEveryParameterButTheAnswerBias) {
  const auto suite = cli::end_to_end_suite(2);
  const auto problem = cli::end_to_end_problem(2);
  EXPECT_EQ(suite.size() + 1, problem.params.tensors().size());
  for (const auto& component : suite) EXPECT_NE(component.component, "answer.b");
}

}  // namespace
}  // namespace rpr

#include "rpr_cli/grad_suites.hpp"

#include <algorithm>
#include <functional>
#include <random>

#include "rpr/answer.hpp"
#include "rpr/attention.hpp"
#include "rpr/model.hpp"

namespace rpr::cli {

namespace {

class Inputs {
 public:
  explicit Inputs(std::uint64_t seed) : rng_(seed) {}

  Tensor leaf(std::size_t rows, std::size_t cols, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(rows * cols);
    for (auto& x : v) x = lo + (hi - lo) * uniform01(rng_);
    return Tensor(rows, cols, std::move(v), true);
  }

  Tensor weights_like(const Tensor& t) {
    Tensor w = leaf(t.rows(), t.cols());
    w.set_requires_grad(false);
    return w;
  }

  std::size_t index(std::size_t bound) { return rng_() % bound; }

 private:
  std::mt19937_64 rng_;
};

SuiteResult check_op(const std::string& name, Inputs& in, std::vector<NamedTensor> leaves,
                     const std::function<Tensor()>& op) {
  Tensor probe;
  {
    NoGradGuard guard;
    probe = op();
  }
  const Tensor w = in.weights_like(probe);
  return {name, grad_check([&] { return sum(mul(op(), w)); }, std::move(leaves), kGradEps)};
}

}  // namespace

std::vector<SuiteResult> op_suite(std::uint64_t seed) {
  Inputs in(seed);
  std::vector<SuiteResult> out;

  Tensor a = in.leaf(3, 4), b = in.leaf(4, 2), c = in.leaf(3, 4), row = in.leaf(1, 4), s = in.leaf(1, 1);
  out.push_back(check_op("matmul", in, {{"a", a}, {"b", b}}, [&] { return matmul(a, b); }));
  out.push_back(check_op("transpose", in, {{"a", a}}, [&] { return transpose(a); }));
  out.push_back(check_op("add", in, {{"a", a}, {"c", c}}, [&] { return add(a, c); }));
  out.push_back(check_op("sub", in, {{"a", a}, {"c", c}}, [&] { return sub(a, c); }));
  out.push_back(check_op("mul", in, {{"a", a}, {"c", c}}, [&] { return mul(a, c); }));
  out.push_back(check_op("add_bias", in, {{"a", a}, {"bias", row}}, [&] { return add_bias(a, row); }));
  out.push_back(check_op("scale", in, {{"a", a}}, [&] { return scale(a, -1.7); }));
  out.push_back(check_op("add_scalar", in, {{"a", a}}, [&] { return add_scalar(a, 0.3); }));
  out.push_back(check_op("scale_by", in, {{"a", a}, {"s", s}}, [&] { return scale_by(a, s); }));
  out.push_back(check_op("tanh", in, {{"a", a}}, [&] { return tanh(a); }));
  out.push_back(check_op("sigmoid", in, {{"a", a}}, [&] { return sigmoid(a); }));
  out.push_back(check_op("softplus", in, {{"a", a}}, [&] { return softplus(scale(a, 3.0)); }));
  out.push_back(check_op("concat_cols", in, {{"a", a}, {"c", c}}, [&] { return concat_cols({a, c}); }));
  out.push_back(check_op("concat_rows", in, {{"a", a}, {"row", row}}, [&] { return concat_rows({a, row}); }));
  out.push_back(check_op("slice_row", in, {{"a", a}}, [&] { return slice_row(a, 1); }));

  Tensor table = in.leaf(6, 4);
  const std::vector<std::size_t> ids{4, 0, 4, 2};
  out.push_back(check_op("gather_rows", in, {{"table", table}}, [&] { return gather_rows(table, ids); }));
  out.push_back(check_op("mean_rows", in, {{"a", a}}, [&] { return mean_rows(a); }));
  out.push_back(check_op("sum", in, {{"a", a}}, [&] { return sum(a); }));
  out.push_back(check_op("pick", in, {{"a", a}}, [&] { return pick(a, 2, 1); }));
  out.push_back(check_op("logsumexp", in, {{"a", a}}, [&] { return logsumexp(a); }));
  out.push_back(check_op("softmax_rows", in, {{"a", a}}, [&] { return softmax_rows(a, 0.7); }));

  Tensor logits = in.leaf(1, 6);
  for (auto kind : {MaskSpec::none(6), MaskSpec::retro(3, 6), MaskSpec::prosp(2, 6)}) {
    const char* tag = kind.kind == MaskSpec::Kind::none ? "none" : kind.kind == MaskSpec::Kind::retro ? "retro" : "prosp";
    out.push_back(check_op(std::string("softmax_with_temperature/") + tag, in, {{"logits", logits}},
                           [&] { return softmax_with_temperature(logits, 0.5, kind); }));
  }

  Tensor q = in.leaf(1, 4), keys = in.leaf(5, 4), values = in.leaf(5, 4);
  const MaskSpec mask = MaskSpec::retro(3, 5);
  out.push_back(check_op("attention", in, {{"query", q}, {"keys", keys}, {"values", values}}, [&] {
    const AttentionOutput o = attention(q, keys, values, 0.5, mask);
    return concat_cols({o.context, o.weights});
  }));

  Tensor scores = in.leaf(1, 4, -2.0, 2.0);
  out.push_back({"loss_multi", grad_check([&] { return loss_multi(scores, 1); }, {{"scores", scores}}, kGradEps)});
  out.push_back({"loss_binary", grad_check([&] { return add(loss_binary(pick(scores, 0, 0), true),
                                                            loss_binary(pick(scores, 0, 2), false)); },
                                           {{"scores", scores}}, kGradEps)});
  return out;
}

EndToEndProblem end_to_end_problem(std::uint64_t seed) {
  constexpr std::size_t n = 7, d = 8, args = 3, options = 4, vocab = 128;
  std::mt19937_64 rng(seed);
  EndToEndProblem p;
  EpisodeRecord& r = p.episode;
  r.id = "gradcheck-" + std::to_string(seed);
  r.frames.assign(n, std::vector<double>(d));
  for (auto& f : r.frames) {
    for (auto& x : f) x = 2.0 * uniform01(rng) - 1.0;
  }
  for (std::size_t i = 0; i < 6; ++i) r.question_tokens.push_back(rng() % (vocab / 2));
  r.srl = {{"ARG0", 0, 1}, {"V", 2, 2}, {"ARG1", 3, 5}};
  for (std::size_t k = 0; k < options; ++k) r.answers.push_back({{vocab / 2 + rng() % (vocab / 2)}});
  r.label = rng() % options;

  p.hp.dim = d;
  p.hp.max_args = args;
  p.hp.steps = 3;
  p.params = ModelParams::initialize({d, d, vocab, args}, seed);
  return p;
}

std::vector<SuiteResult> end_to_end_suite(std::uint64_t seed) {
  EndToEndProblem p = end_to_end_problem(seed);
  Controls controls;
  {
    NoGradGuard guard;
    controls = forward_episode(p.episode, p.params, p.hp).reasoning.controls();
  }
  ForwardOptions options;
  options.run.forced = &controls;
  auto loss = [&] { return loss_multi(forward_episode(p.episode, p.params, p.hp, options).scores, p.episode.label); };

  std::vector<NamedTensor> checked = p.params.named();
  std::erase_if(checked, [](const NamedTensor& t) { return t.first == "answer.b"; });
  GradCheckReport report = grad_check(loss, std::move(checked), kGradEps);

  std::vector<SuiteResult> out;
  for (auto& e : report.entries) out.push_back({e.name, GradCheckReport{{e}}});
  return out;
}

}  // namespace rpr::cli

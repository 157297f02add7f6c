#include "rpr/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "rpr/errors.hpp"

namespace rpr {

double GradCheckReport::max_rel_error() const {
  double worst = 0.0;
  for (const auto& e : entries) worst = std::max(worst, e.max_rel_error);
  return worst;
}

const GradCheckEntry* GradCheckReport::worst() const {
  const GradCheckEntry* w = nullptr;
  for (const auto& e : entries)
    if (!w || e.max_rel_error > w->max_rel_error) w = &e;
  return w;
}

namespace {

double evaluate(const std::function<Tensor()>& f) {
  NoGradGuard no_grad;
  const double v = f().item();
  if (!std::isfinite(v)) throw DomainError("grad_check: function value is not finite");
  return v;
}

}  // namespace

GradCheckReport grad_check(const std::function<Tensor()>& f, std::vector<NamedTensor> params,
                           double eps) {
  if (!(eps > 0.0)) throw DomainError("grad_check: eps must be positive");

  for (auto& [name, p] : params) p.zero_grad();
  Tensor loss = f();
  if (!std::isfinite(loss.item())) throw DomainError("grad_check: function value is not finite");
  backward(loss);

  GradCheckReport report;
  for (auto& [name, p] : params) {
    GradCheckEntry entry{name};
    std::vector<double> analytic(p.grad().begin(), p.grad().end());
    auto values = p.mutable_values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + eps;
      const double up = evaluate(f);
      values[i] = saved - eps;
      const double down = evaluate(f);
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
      const double rel = std::abs(analytic[i] - numeric) / denom;
      if (i == 0 || rel > entry.max_rel_error) {
        entry.max_rel_error = rel;
        entry.worst_index = i;
        entry.analytic = analytic[i];
        entry.numeric = numeric;
      }
    }
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace rpr

#include "vrg/numerics/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "vrg/error.hpp"

namespace vrg::num {

GradCheckReport grad_check(const LossFn& loss, ParameterSet& params, double eps, double resolved_magnitude) {
  if (!(eps > 0.0)) throw DomainError("grad_check: eps must be positive");

  Gradients analytic;
  const double base = loss(params, &analytic);
  const double again = loss(params, nullptr);
  if (base != again) {
    throw DomainError("grad_check: loss is not deterministic (" + std::to_string(base) + " vs " +
                      std::to_string(again) + ")");
  }

  GradCheckReport report;
  for (const auto& name : params.names()) {
    Tensor& theta = params.get(name);
    auto git = analytic.find(name);
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double saved = theta[i];
      theta[i] = saved + eps;
      const double up = loss(params, nullptr);
      theta[i] = saved - eps;
      const double down = loss(params, nullptr);
      theta[i] = saved;

      const double numeric = (up - down) / (2.0 * eps);
      const double a = git == analytic.end() ? 0.0 : git->second[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      const double rel = std::abs(a - numeric) / denom;
      const double abs_err = std::abs(a - numeric);
      ++report.coordinates;
      report.max_abs_error = std::max(report.max_abs_error, abs_err);
      if (std::max(std::abs(a), std::abs(numeric)) >= resolved_magnitude) {
        ++report.resolved_coordinates;
        report.max_resolved_rel_error = std::max(report.max_resolved_rel_error, rel);
      }
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_parameter = name;
        report.worst_index = i;
        report.worst_analytic = a;
        report.worst_numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace vrg::num

#pragma once

#include <functional>
#include <string>

#include "vrg/numerics/parameters.hpp"

namespace vrg::num {

/// Evaluates a scalar loss at the given parameters. When `analytic` is non-null
/// the callee fills it with the reverse-mode gradient.
using LossFn = std::function<double(const ParameterSet& params, Gradients* analytic)>;

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t coordinates = 0;
  double max_abs_error = 0.0;
  // Restricted to coordinates with max(|a|, |n|) >= resolved_magnitude, where
  // the difference quotient is not dominated by rounding in the loss.
  double max_resolved_rel_error = 0.0;
  std::size_t resolved_coordinates = 0;
};

/// Central finite differences on every coordinate of every parameter, compared
/// against the analytic gradient with relative error
/// |a - n| / max(|a|, |n|, 1e-8). Parameters are restored afterwards.
GradCheckReport grad_check(const LossFn& loss, ParameterSet& params, double eps, double resolved_magnitude = 1e-6);

}  // namespace vrg::num

#pragma once

#include "dbrf/core/common.hpp"

#include <limits>

namespace dbrf {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_tensor = 0;
  std::size_t worst_entry = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t entries_checked = 0;
};

/// Compares reverse-mode gradients to central finite differences.
///
/// `loss_fn(params, grads*)` must return the scalar loss and, when `grads` is
/// non-null, accumulate the analytic gradient into it (grads arrives zeroed).
/// Relative error per entry is |a - n| / max(|a|, |n|, floor); the floor keeps
/// entries whose true gradient is ~0 from dominating through round-off.
template <class Params, class LossFn>
GradCheckResult grad_check(LossFn&& loss_fn, Params params, double epsilon = 1e-5, double floor = 1e-6) {
  require(epsilon > 0.0, "grad_check: epsilon must be positive");
  Params grads = zeroed_copy(params);
  const double base = loss_fn(std::as_const(params), &grads);
  if (!std::isfinite(base)) throw NumericError("loss", "grad_check: loss is not finite at the base point");

  std::vector<std::span<double>> p_views, g_views;
  collect_tensors(params, p_views);
  collect_tensors(grads, g_views);

  GradCheckResult result;
  for (std::size_t t = 0; t < p_views.size(); ++t) {
    auto p = p_views[t];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double saved = p[i];
      p[i] = saved + epsilon;
      const double plus = loss_fn(std::as_const(params), nullptr);
      p[i] = saved - epsilon;
      const double minus = loss_fn(std::as_const(params), nullptr);
      p[i] = saved;
      if (!std::isfinite(plus) || !std::isfinite(minus))
        throw NumericError("loss", "grad_check: loss is not finite under perturbation");
      const double numeric = (plus - minus) / (2.0 * epsilon);
      const double analytic = g_views[t][i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
      const double rel = std::abs(analytic - numeric) / denom;
      ++result.entries_checked;
      if (rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_tensor = t;
        result.worst_entry = i;
        result.analytic = analytic;
        result.numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace dbrf

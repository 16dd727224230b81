#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "ascnet/core.hpp"

namespace ascnet {

/// Evaluates the loss at the current parameter values. When `grads` is
/// non-null it also stores the reverse-mode gradient of every parameter, in
/// the same order as the parameter list given to grad_check.
using LossFunction = std::function<double(std::vector<Matrix<double>>* grads)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t checked_entries = 0;
  std::size_t worst_param = 0;
  Index worst_entry = 0;
};

/// Central finite differences on every entry of every parameter against the
/// reverse-mode gradient. Relative error uses max(|analytic|, |numeric|, 1e-8)
/// as denominator. Throws DeterminismError when two evaluations at the same
/// point disagree.
inline GradCheckResult grad_check_detailed(const LossFunction& loss_fn, const std::vector<Matrix<double>*>& params,
                                           double eps) {
  if (!(eps > 0.0)) throw ParameterError("grad_check: eps must be positive");
  std::vector<Matrix<double>> analytic;
  const double base = loss_fn(&analytic);
  const double again = loss_fn(nullptr);
  if (base != again) {
    throw DeterminismError("grad_check: loss function is not deterministic (" + std::to_string(base) + " vs " +
                           std::to_string(again) + ")");
  }
  if (analytic.size() != params.size()) {
    throw ShapeError("grad_check: loss function returned " + std::to_string(analytic.size()) + " gradients for " +
                     std::to_string(params.size()) + " parameters");
  }

  GradCheckResult result;
  for (std::size_t p = 0; p < params.size(); ++p) {
    Matrix<double>& w = *params[p];
    if (analytic[p].rows() != w.rows() || analytic[p].cols() != w.cols()) {
      throw ShapeError("grad_check: gradient " + std::to_string(p) + " has shape " + shape_string(analytic[p]) +
                       ", parameter has " + shape_string(w));
    }
    for (Index i = 0; i < w.size(); ++i) {
      const double saved = w.data()[i];
      w.data()[i] = saved + eps;
      const double plus = loss_fn(nullptr);
      w.data()[i] = saved - eps;
      const double minus = loss_fn(nullptr);
      w.data()[i] = saved;

      const double numeric = (plus - minus) / (2.0 * eps);
      const double exact = analytic[p].data()[i];
      const double denom = std::max({std::abs(exact), std::abs(numeric), 1e-8});
      const double err = std::abs(exact - numeric) / denom;
      if (err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst_param = p;
        result.worst_entry = i;
      }
      ++result.checked_entries;
    }
  }
  return result;
}

inline double grad_check(const LossFunction& loss_fn, const std::vector<Matrix<double>*>& params, double eps) {
  return grad_check_detailed(loss_fn, params, eps).max_relative_error;
}

}  // namespace ascnet

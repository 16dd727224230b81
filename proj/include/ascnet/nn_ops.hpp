#pragma once

#include <cmath>
#include <string>

#include "ascnet/autodiff.hpp"
#include "ascnet/rng.hpp"

namespace ascnet {

struct BatchNormOptions {
  double eps = 1e-5;
  /// Weight of the previous running value: running = momentum * running + (1 - momentum) * batch.
  double momentum = 0.9;
};

template <typename Scalar>
struct BatchNormStats {
  std::string name;
  RowVector<Scalar> mean;
  RowVector<Scalar> var;

  static BatchNormStats fresh(std::string name, Index width) {
    return {std::move(name), RowVector<Scalar>::Zero(width), RowVector<Scalar>::Ones(width)};
  }
};

/// Per-column batch normalization over all rows of x, followed by gamma * xhat + beta.
///
/// Train mode normalizes with the biased batch variance and folds the
/// unbiased variance into `stats`. Eval mode uses `stats` unchanged.
template <typename Scalar>
Var<Scalar> batch_norm(const Var<Scalar>& x, const Var<Scalar>& gamma, const Var<Scalar>& beta,
                       BatchNormStats<Scalar>& stats, ComputeMode mode, const BatchNormOptions& opt = {}) {
  const Index m = x.rows();
  const Index c = x.cols();
  if (gamma.rows() != 1 || gamma.cols() != c || beta.rows() != 1 || beta.cols() != c) {
    throw ShapeError("batch_norm: gamma/beta must be 1x" + std::to_string(c) + ", got " +
                     shape_string(gamma.rows(), gamma.cols()) + " and " + shape_string(beta.rows(), beta.cols()));
  }
  if (stats.mean.size() != c || stats.var.size() != c) {
    throw ShapeError("batch_norm: running statistics have width " + std::to_string(stats.mean.size()) +
                     ", input has " + std::to_string(c));
  }
  const Scalar eps = static_cast<Scalar>(opt.eps);

  RowVector<Scalar> mean;
  RowVector<Scalar> var;
  if (mode == ComputeMode::Train) {
    if (m < 1) throw ShapeError("batch_norm: empty batch");
    mean = x.value().colwise().mean();
    var = (x.value().rowwise() - mean).array().square().colwise().mean().matrix();
    const Scalar mom = static_cast<Scalar>(opt.momentum);
    const Scalar unbias = m > 1 ? Scalar(m) / Scalar(m - 1) : Scalar(1);
    stats.mean = mom * stats.mean + (Scalar(1) - mom) * mean;
    stats.var = mom * stats.var + (Scalar(1) - mom) * unbias * var;
  } else {
    mean = stats.mean;
    var = stats.var;
  }

  RowVector<Scalar> inv_std = (var.array() + eps).rsqrt().matrix();
  Matrix<Scalar> xhat = ((x.value().rowwise() - mean).array().rowwise() * inv_std.array()).matrix();
  Matrix<Scalar> out = (xhat.array().rowwise() * gamma.value().row(0).array()).rowwise() + beta.value().row(0).array();

  const bool batch_stats = mode == ComputeMode::Train;
  return x.tape().record(
      std::move(out), {x, gamma, beta},
      [x, gamma, beta, xhat, inv_std, batch_stats](Tape<Scalar>& t, const Matrix<Scalar>& g) {
        if (t.requires_grad(gamma)) t.accumulate(gamma, g.cwiseProduct(xhat).colwise().sum());
        if (t.requires_grad(beta)) t.accumulate(beta, g.colwise().sum());
        if (!t.requires_grad(x)) return;
        RowVector<Scalar> scale = gamma.value().row(0).cwiseProduct(inv_std);
        if (!batch_stats) {
          t.accumulate(x, (g.array().rowwise() * scale.array()).matrix());
          return;
        }
        const Scalar m = Scalar(g.rows());
        RowVector<Scalar> sum_g = g.colwise().sum();
        RowVector<Scalar> sum_gx = g.cwiseProduct(xhat).colwise().sum();
        Matrix<Scalar> d = (g * m).rowwise() - sum_g;
        d -= (xhat.array().rowwise() * sum_gx.array()).matrix();
        t.accumulate(x, (d.array().rowwise() * (scale.array() / m)).matrix());
      });
}

/// Inverted dropout: in Train mode each entry survives with probability 1 - p
/// and is scaled by 1 / (1 - p). Eval mode and p == 0 are the identity.
template <typename Scalar>
Var<Scalar> dropout(const Var<Scalar>& x, double p, ComputeMode mode, Rng& rng) {
  if (!(p >= 0.0 && p < 1.0)) throw ParameterError("dropout: p must lie in [0, 1), got " + std::to_string(p));
  if (mode == ComputeMode::Eval || p == 0.0) return x;
  const Scalar keep_scale = static_cast<Scalar>(1.0 / (1.0 - p));
  Matrix<Scalar> mask(x.rows(), x.cols());
  for (Index i = 0; i < mask.size(); ++i) mask.data()[i] = rng.bernoulli(p) ? Scalar(0) : keep_scale;
  Matrix<Scalar> out = x.value().cwiseProduct(mask);
  return x.tape().record(std::move(out), {x}, [x, mask](Tape<Scalar>& t, const Matrix<Scalar>& g) {
    t.accumulate(x, g.cwiseProduct(mask));
  });
}

}  // namespace ascnet

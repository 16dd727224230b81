#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ascnet/layers.hpp"

namespace ascnet {

struct ModelConfig {
  Index n_levels = 10;
  Index feat_dim = 1024;
  Index hidden = 512;
  Index n_classes = 101;
  double dropout_p = 0.5;
  Precision precision = Precision::Double;

  // Structure switches; the ablation variants set these.
  MaskKind teacher_mask = MaskKind::TeacherBidirectional;
  MaskKind student_mask = MaskKind::StudentCausal;
  bool use_teacher = true;
  bool dense_connections = true;

  bool similarity_stop_gradient = false;
  bool share_aprime = false;
  bool dgc_share_weights = false;

  double bn_eps = 1e-5;
  double bn_momentum = 0.9;

  void validate() const;
  BatchNormOptions batch_norm() const { return {bn_eps, bn_momentum}; }

  /// Flat key/value view used by checkpoints and config echoes.
  std::map<std::string, std::string> to_map() const;
  static ModelConfig from_map(const std::map<std::string, std::string>& kv);

  bool operator==(const ModelConfig&) const = default;
};

/// One GC layer followed by one DGC block.
struct Branch {
  GcLayer gc;
  DgcBlock dgc;
};

/// Teacher and student branches with a shared FC head. Parameters live in a
/// flat list; layers refer to them by index, so aliases express sharing and
/// the whole network copies as a value.
template <typename Scalar>
struct AscNet {
  ModelConfig config;
  std::vector<Parameter<Scalar>> params;
  std::vector<BatchNormStats<Scalar>> stats;
  std::optional<Branch> teacher;
  Branch student;
  std::size_t fc_weight = 0;
  std::size_t fc_bias = 0;

  std::size_t parameter_count() const {
    std::size_t total = 0;
    for (const auto& p : params) total += static_cast<std::size_t>(p.value.size());
    return total;
  }

  std::optional<std::size_t> find(const std::string& name) const {
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (params[i].name == name) return i;
    }
    return std::nullopt;
  }
};

/// Per-layer features and outputs of one forward pass. Feature matrices are
/// stacked over the batch: B blocks of N rows, one row per progress level.
template <typename Scalar>
struct ForwardTrace {
  std::vector<Var<Scalar>> f_t;  ///< teacher: [after GC, after DGC]; empty without a teacher
  std::vector<Var<Scalar>> f_s;  ///< student: [after GC, after DGC]
  Var<Scalar> scores_t;          ///< pre-softmax head outputs
  Var<Scalar> scores_s;
  Var<Scalar> logits_t;          ///< softmax_rows(scores)
  Var<Scalar> logits_s;
  Index block_rows = 0;

  bool has_teacher() const { return !f_t.empty(); }
  Index batch_size() const { return logits_s.rows() / block_rows; }
};

namespace detail {

template <typename Scalar>
std::size_t add_param(AscNet<Scalar>& net, std::string name, Matrix<Scalar> value) {
  net.params.push_back({std::move(name), std::move(value)});
  return net.params.size() - 1;
}

template <typename Scalar>
Matrix<Scalar> fan_in_uniform(Index rows, Index cols, Index fan_in, Rng& rng) {
  const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
  Matrix<Scalar> m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Scalar>(rng.uniform(-bound, bound));
  return m;
}

template <typename Scalar>
Matrix<Scalar> aprime_init(Index n, Rng& rng) {
  Matrix<Scalar> m(n, n);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Scalar>(1.0 + rng.uniform(-0.01, 0.01));
  return m;
}

template <typename Scalar>
GUnit make_unit(AscNet<Scalar>& net, const std::string& prefix, MaskKind mask, std::optional<std::size_t> aprime,
                Rng& rng) {
  const auto& c = net.config;
  GUnit u;
  u.gc.weight = add_param(net, prefix + ".gc.weight", fan_in_uniform<Scalar>(c.hidden, c.hidden, c.hidden, rng));
  u.gc.adjacency.mask = mask;
  u.gc.adjacency.learnable =
      aprime ? *aprime : add_param(net, prefix + ".gc.aprime", aprime_init<Scalar>(c.n_levels, rng));
  u.gamma = add_param(net, prefix + ".bn.gamma", Matrix<Scalar>(Matrix<Scalar>::Ones(1, c.hidden)));
  u.beta = add_param(net, prefix + ".bn.beta", Matrix<Scalar>(Matrix<Scalar>::Zero(1, c.hidden)));
  net.stats.push_back(BatchNormStats<Scalar>::fresh(prefix + ".bn", c.hidden));
  u.stats = net.stats.size() - 1;
  u.dropout_p = c.dropout_p;
  return u;
}

/// `shared` carries the teacher's adjacency indices when share_aprime is on.
template <typename Scalar>
Branch make_branch(AscNet<Scalar>& net, const std::string& prefix, MaskKind mask, const Branch* shared, Rng& rng) {
  const auto& c = net.config;
  auto shared_aprime = [&](std::size_t which) -> std::optional<std::size_t> {
    if (shared == nullptr) return std::nullopt;
    switch (which) {
      case 0: return shared->gc.adjacency.learnable;
      case 1: return shared->dgc.inner.gc.adjacency.learnable;
      default: return shared->dgc.outer.gc.adjacency.learnable;
    }
  };
  Branch b;
  b.gc.weight = add_param(net, prefix + ".gc.weight", fan_in_uniform<Scalar>(c.feat_dim, c.hidden, c.feat_dim, rng));
  b.gc.adjacency.mask = mask;
  const auto gc_aprime = shared_aprime(0);
  b.gc.adjacency.learnable =
      gc_aprime ? *gc_aprime : add_param(net, prefix + ".gc.aprime", aprime_init<Scalar>(c.n_levels, rng));
  b.dgc.dense = c.dense_connections;
  b.dgc.inner = make_unit(net, prefix + ".dgc.inner", mask, shared_aprime(1), rng);
  if (c.dgc_share_weights) {
    b.dgc.outer = b.dgc.inner;
  } else {
    b.dgc.outer = make_unit(net, prefix + ".dgc.outer", mask, shared_aprime(2), rng);
  }
  return b;
}

}  // namespace detail

/// Allocates and initializes every parameter. Initialization draws, in order:
/// teacher branch (if any), student branch, shared head. Weights are
/// uniform(-sqrt(1/fan_in), sqrt(1/fan_in)); adjacency matrices start at
/// 1 + uniform(-0.01, 0.01); BN gamma = 1, beta = 0; FC bias = 0.
template <typename Scalar>
AscNet<Scalar> build(const ModelConfig& config, Rng& rng) {
  config.validate();
  AscNet<Scalar> net;
  net.config = config;
  if (config.use_teacher) net.teacher = detail::make_branch(net, "teacher", config.teacher_mask, nullptr, rng);
  const Branch* shared = config.share_aprime && net.teacher ? &*net.teacher : nullptr;
  net.student = detail::make_branch(net, "student", config.student_mask, shared, rng);
  net.fc_weight = detail::add_param(
      net, "shared_fc.weight", detail::fan_in_uniform<Scalar>(config.hidden, config.n_classes, config.hidden, rng));
  net.fc_bias = detail::add_param(net, "shared_fc.bias", Matrix<Scalar>(Matrix<Scalar>::Zero(1, config.n_classes)));
  return net;
}

/// Puts every parameter on the tape, as gradient-tracked leaves when trainable.
template <typename Scalar>
std::vector<Var<Scalar>> bind_parameters(const AscNet<Scalar>& net, Tape<Scalar>& tape, bool trainable) {
  std::vector<Var<Scalar>> vars;
  vars.reserve(net.params.size());
  for (const auto& p : net.params) vars.push_back(trainable ? tape.variable(p.value) : tape.constant(p.value));
  return vars;
}

namespace detail {

template <typename Scalar>
void run_branch(const Branch& branch, const Var<Scalar>& x, const LayerContext<Scalar>& ctx,
                const Var<Scalar>& fc_w, const Var<Scalar>& fc_b, std::vector<Var<Scalar>>& features,
                Var<Scalar>& scores, Var<Scalar>& logits) {
  Var<Scalar> h1 = gc_forward(branch.gc, x, ctx);
  Var<Scalar> h2 = dgc_forward(branch.dgc, h1, ctx);
  features = {h1, h2};
  scores = add_row_broadcast(matmul(h2, fc_w), fc_b);
  logits = softmax_rows(scores);
}

}  // namespace detail

namespace detail {

template <typename Scalar>
ForwardTrace<Scalar> forward_impl(const AscNet<Scalar>& net, std::span<BatchNormStats<Scalar>> stats,
                                  std::span<const Var<Scalar>> params, const Var<Scalar>& features,
                                  ComputeMode mode, Rng* rng, bool student_only) {
  const auto& c = net.config;
  if (features.cols() != c.feat_dim || features.rows() == 0 || features.rows() % c.n_levels != 0) {
    throw ShapeError("forward: features " + shape_string(features.rows(), features.cols()) +
                     " are not a stack of " + std::to_string(c.n_levels) + "x" + std::to_string(c.feat_dim) +
                     " samples");
  }
  if (params.size() != net.params.size()) {
    throw ShapeError("forward: " + std::to_string(params.size()) + " bound parameters for a model with " +
                     std::to_string(net.params.size()));
  }
  LayerContext<Scalar> ctx{params, stats, mode, rng, c.similarity_stop_gradient, c.batch_norm()};
  ForwardTrace<Scalar> trace;
  trace.block_rows = c.n_levels;
  const auto& fc_w = params[net.fc_weight];
  const auto& fc_b = params[net.fc_bias];
  if (net.teacher && !student_only) {
    run_branch(*net.teacher, features, ctx, fc_w, fc_b, trace.f_t, trace.scores_t, trace.logits_t);
  }
  run_branch(net.student, features, ctx, fc_w, fc_b, trace.f_s, trace.scores_s, trace.logits_s);
  return trace;
}

}  // namespace detail

/// Runs both branches over the same stacked node features (B*N) x D.
/// Train mode updates BN running statistics in `net` and draws dropout masks
/// from `rng`; with `student_only` the teacher branch is skipped.
template <typename Scalar>
ForwardTrace<Scalar> forward(AscNet<Scalar>& net, std::span<const Var<Scalar>> params, const Var<Scalar>& features,
                             ComputeMode mode, Rng* rng, bool student_only = false) {
  return detail::forward_impl<Scalar>(net, net.stats, params, features, mode, rng, student_only);
}

/// Eval-mode forward that leaves the model untouched.
template <typename Scalar>
ForwardTrace<Scalar> forward_eval(const AscNet<Scalar>& net, std::span<const Var<Scalar>> params,
                                  const Var<Scalar>& features, bool student_only = false) {
  auto stats = net.stats;
  return detail::forward_impl<Scalar>(net, stats, params, features, ComputeMode::Eval, nullptr, student_only);
}

/// Student-only class probabilities for all N levels of one sample, (N x C).
template <typename Scalar>
Matrix<Scalar> student_distribution(const AscNet<Scalar>& net, const Matrix<Scalar>& sample_features) {
  Tape<Scalar> tape;
  auto params = bind_parameters(net, tape, false);
  auto trace = forward_eval<Scalar>(net, params, tape.constant(sample_features), true);
  return trace.logits_s.value();
}

/// Index of the largest entry; ties go to the lowest index.
template <typename Derived>
int argmax_lowest(const Eigen::MatrixBase<Derived>& row) {
  int best = 0;
  for (Index j = 1; j < row.size(); ++j) {
    if (row(j) > row(best)) best = static_cast<int>(j);
  }
  return best;
}

template <typename Scalar>
struct Prediction {
  int class_id = 0;
  RowVector<Scalar> distribution;
};

/// Prediction at progress level `level` (1-based) from the student branch
/// only; rows after `level` cannot influence the result.
template <typename Scalar>
Prediction<Scalar> predict(const AscNet<Scalar>& net, const Matrix<Scalar>& sample_features, Index level) {
  if (level < 1 || level > net.config.n_levels) {
    throw ParameterError("predict: level " + std::to_string(level) + " outside [1, " +
                         std::to_string(net.config.n_levels) + "]");
  }
  if (sample_features.rows() != net.config.n_levels) {
    throw ShapeError("predict: expected one sample of " + std::to_string(net.config.n_levels) + " rows, got " +
                     shape_string(sample_features));
  }
  Matrix<Scalar> dist = student_distribution(net, sample_features);
  Prediction<Scalar> p;
  p.distribution = dist.row(level - 1);
  p.class_id = argmax_lowest(p.distribution);
  return p;
}

}  // namespace ascnet

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <ostream>
#include <vector>

#include "ascnet/data.hpp"
#include "ascnet/loss.hpp"

namespace ascnet {

struct TrainConfig {
  int epochs = 200;
  int batch_size = 16;
  double lr_init = 1e-4;
  double lr_decay = 0.95;
  std::vector<int> lr_milestones{100, 150, 250, 350};
  double momentum = 0.9;
  std::uint64_t seed = 0;
  int eval_every = 10;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

/// lr_init * lr_decay^(number of milestones <= epoch); epochs count from 0.
double lr_at(int epoch, const TrainConfig& config);

template <typename Scalar>
struct OptimizerState {
  double lr = 0.0;
  double momentum = 0.9;
  std::vector<Matrix<Scalar>> velocity;

  static OptimizerState zeros_like(const std::vector<Parameter<Scalar>>& params, double lr, double momentum) {
    OptimizerState s{lr, momentum, {}};
    for (const auto& p : params) s.velocity.push_back(Matrix<Scalar>::Zero(p.value.rows(), p.value.cols()));
    return s;
  }
};

/// Heavy-ball momentum: v <- momentum * v + g; p <- p - lr * v.
template <typename Scalar>
void sgd_step(std::vector<Parameter<Scalar>>& params, const std::vector<Matrix<Scalar>>& grads,
              OptimizerState<Scalar>& state) {
  if (grads.size() != params.size() || state.velocity.size() != params.size()) {
    throw ShapeError("sgd_step: " + std::to_string(params.size()) + " parameters, " + std::to_string(grads.size()) +
                     " gradients, " + std::to_string(state.velocity.size()) + " velocity buffers");
  }
  const Scalar lr = static_cast<Scalar>(state.lr);
  const Scalar mom = static_cast<Scalar>(state.momentum);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i].value;
    if (grads[i].rows() != p.rows() || grads[i].cols() != p.cols() || state.velocity[i].rows() != p.rows() ||
        state.velocity[i].cols() != p.cols()) {
      throw ShapeError("sgd_step: shape mismatch for " + params[i].name + ": parameter " + shape_string(p) +
                       ", gradient " + shape_string(grads[i]) + ", velocity " + shape_string(state.velocity[i]));
    }
    state.velocity[i] = mom * state.velocity[i] + grads[i];
    p -= lr * state.velocity[i];
  }
}

struct EpochLog {
  int epoch = 0;
  double lr = 0.0;
  LossReport loss;  ///< mean over the epoch's steps
  std::optional<double> eval_auc;
};

void write_training_log_csv(std::ostream& out, const std::vector<EpochLog>& log);

template <typename Scalar>
struct TrainResult {
  AscNet<Scalar> best;
  OptimizerState<Scalar> best_optimizer;
  int best_epoch = -1;
  double best_auc = -1.0;
  AscNet<Scalar> last;
  std::vector<EpochLog> log;
};

/// Stacks the features of the given samples into (B*N) x D.
template <typename Scalar>
Matrix<Scalar> stack_features(const Dataset& data, std::span<const std::size_t> indices) {
  Matrix<Scalar> x(static_cast<Index>(indices.size()) * data.n_levels, data.feat_dim);
  for (std::size_t b = 0; b < indices.size(); ++b) {
    x.middleRows(static_cast<Index>(b) * data.n_levels, data.n_levels) =
        data.samples[indices[b]].features.template cast<Scalar>();
  }
  return x;
}

/// Student-branch class predictions for every sample and level, (samples x N).
template <typename Scalar>
std::vector<std::vector<int>> predict_all_levels(const AscNet<Scalar>& net, const Dataset& data,
                                                 std::size_t chunk = 256) {
  std::vector<std::vector<int>> out(data.size(), std::vector<int>(static_cast<std::size_t>(data.n_levels)));
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t start = 0; start < idx.size(); start += chunk) {
    const std::size_t count = std::min(chunk, idx.size() - start);
    std::span<const std::size_t> part(idx.data() + start, count);
    Tape<Scalar> tape;
    auto params = bind_parameters(net, tape, false);
    auto trace = forward_eval<Scalar>(net, params, tape.constant(stack_features<Scalar>(data, part)), true);
    const auto& probs = trace.logits_s.value();
    for (std::size_t b = 0; b < count; ++b) {
      for (Index n = 0; n < data.n_levels; ++n) {
        out[start + b][static_cast<std::size_t>(n)] = argmax_lowest(probs.row(static_cast<Index>(b) * data.n_levels + n));
      }
    }
  }
  return out;
}

/// One optimization step on a mini-batch. Returns the loss components.
template <typename Scalar>
LossReport train_step(AscNet<Scalar>& net, OptimizerState<Scalar>& opt, const Dataset& data,
                      std::span<const std::size_t> batch, const LossFlags& flags, Rng& dropout_rng) {
  Tape<Scalar> tape;
  auto params = bind_parameters(net, tape, true);
  auto x = tape.constant(stack_features<Scalar>(data, batch));
  std::vector<int> labels;
  labels.reserve(batch.size());
  for (auto i : batch) labels.push_back(data.samples[i].label);

  auto trace = forward<Scalar>(net, params, x, ComputeMode::Train, &dropout_rng);
  auto terms = total_loss(trace, labels, flags);
  tape.backward(terms.total);

  std::vector<Matrix<Scalar>> grads;
  grads.reserve(params.size());
  for (const auto& p : params) grads.push_back(p.grad());
  sgd_step(net.params, grads, opt);
  return terms.report();
}

/// Epoch loop: seeded shuffle, mini-batch steps, periodic evaluation on
/// `test` with model selection by AUC (the mean per-level accuracy). The
/// final epoch is always evaluated. `evaluate_auc` maps a model to its AUC.
template <typename Scalar>
TrainResult<Scalar> train(AscNet<Scalar> model, const Dataset& train_data, const TrainConfig& config,
                          const LossFlags& flags,
                          const std::function<double(const AscNet<Scalar>&)>& evaluate_auc,
                          std::optional<OptimizerState<Scalar>> resume = std::nullopt) {
  config.validate();
  if (train_data.empty()) throw ParameterError("train: training set is empty");
  train_data.validate();
  const auto& mc = model.config;
  if (train_data.n_levels != mc.n_levels || train_data.feat_dim != mc.feat_dim ||
      train_data.n_classes != static_cast<int>(mc.n_classes)) {
    throw ShapeError("train: data is N=" + std::to_string(train_data.n_levels) + " D=" +
                     std::to_string(train_data.feat_dim) + " C=" + std::to_string(train_data.n_classes) +
                     ", model expects N=" + std::to_string(mc.n_levels) + " D=" + std::to_string(mc.feat_dim) +
                     " C=" + std::to_string(mc.n_classes));
  }

  Rng root(config.seed);
  Rng shuffle_rng = root.stream("shuffle");
  Rng dropout_rng = root.stream("dropout");

  TrainResult<Scalar> result;
  OptimizerState<Scalar> opt =
      resume ? *resume : OptimizerState<Scalar>::zeros_like(model.params, config.lr_init, config.momentum);
  result.best = model;
  result.best_optimizer = opt;

  std::vector<std::size_t> order(train_data.size());
  std::iota(order.begin(), order.end(), 0);
  const auto batch = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    opt.lr = lr_at(epoch, config);
    std::shuffle(order.begin(), order.end(), shuffle_rng.engine());
    LossReport sum;
    int steps = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      std::span<const std::size_t> part(order.data() + start, std::min(batch, order.size() - start));
      const LossReport r = train_step(model, opt, train_data, part, flags, dropout_rng);
      const std::pair<const char*, double> parts[] = {
          {"l_mse", r.l_mse}, {"l_mmd", r.l_mmd}, {"l_ct", r.l_ct}, {"l_cs", r.l_cs}, {"total", r.total}};
      for (auto [name, v] : parts) {
        if (!std::isfinite(v)) {
          throw NumericError(std::string("train: non-finite ") + name + " at epoch " + std::to_string(epoch) +
                             ", step " + std::to_string(steps));
        }
      }
      sum.l_mse += r.l_mse;
      sum.l_mmd += r.l_mmd;
      sum.l_ct += r.l_ct;
      sum.l_cs += r.l_cs;
      sum.total += r.total;
      ++steps;
    }
    EpochLog entry;
    entry.epoch = epoch;
    entry.lr = opt.lr;
    entry.loss = {sum.l_mse / steps, sum.l_mmd / steps, sum.l_ct / steps, sum.l_cs / steps, sum.total / steps};
    if ((epoch + 1) % config.eval_every == 0 || epoch + 1 == config.epochs) {
      const double auc = evaluate_auc(model);
      entry.eval_auc = auc;
      if (auc > result.best_auc) {
        result.best_auc = auc;
        result.best_epoch = epoch;
        result.best = model;
        result.best_optimizer = opt;
      }
    }
    result.log.push_back(entry);
  }
  result.last = std::move(model);
  return result;
}

}  // namespace ascnet

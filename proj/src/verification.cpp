#include "ascnet/verification.hpp"

namespace ascnet {

ModelConfig tiny_model_config() {
  ModelConfig c;
  c.n_levels = 4;
  c.feat_dim = 8;
  c.hidden = 6;
  c.n_classes = 3;
  c.precision = Precision::Double;
  return c;
}

GradCheckResult check_model_gradients(const ModelConfig& config, const LossFlags& flags, std::uint64_t seed,
                                      double eps, int batch) {
  if (batch < 1) throw ParameterError("check_model_gradients: batch must be >= 1");
  Rng root(seed);
  Rng init = root.stream("init");
  auto net = build<double>(config, init);

  Rng data_rng = root.stream("data");
  Matrix<double> x(batch * config.n_levels, config.feat_dim);
  for (Index i = 0; i < x.size(); ++i) x.data()[i] = data_rng.normal();
  std::vector<int> labels;
  for (int b = 0; b < batch; ++b) labels.push_back(static_cast<int>(data_rng.uniform(0.0, 1.0) * config.n_classes));

  LossFunction loss_fn = [&](std::vector<Matrix<double>>* grads) {
    Tape<double> tape;
    auto params = bind_parameters(net, tape, grads != nullptr);
    Rng dropout_rng = root.stream("dropout");
    auto trace = forward<double>(net, params, tape.constant(x), ComputeMode::Train, &dropout_rng);
    auto terms = total_loss(trace, labels, flags);
    if (grads != nullptr) {
      tape.backward(terms.total);
      grads->clear();
      for (const auto& p : params) grads->push_back(p.grad());
    }
    return terms.total.value()(0, 0);
  };

  std::vector<Matrix<double>*> targets;
  for (auto& p : net.params) targets.push_back(&p.value);
  return grad_check_detailed(loss_fn, targets, eps);
}

}  // namespace ascnet

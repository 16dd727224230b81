#include "ascnet/training.hpp"

#include "text.hpp"

namespace ascnet {

void TrainConfig::validate() const {
  if (epochs < 0) throw ParameterError("train: epochs must be >= 0");
  if (batch_size < 1) throw ParameterError("train: batch_size must be >= 1");
  if (!(lr_init > 0.0)) throw ParameterError("train: lr_init must be positive");
  if (!(lr_decay > 0.0)) throw ParameterError("train: lr_decay must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ParameterError("train: momentum must lie in [0, 1)");
  if (eval_every < 1) throw ParameterError("train: eval_every must be >= 1");
  for (std::size_t i = 1; i < lr_milestones.size(); ++i) {
    if (lr_milestones[i] <= lr_milestones[i - 1]) {
      throw ParameterError("train: lr_milestones must be strictly increasing");
    }
  }
}

double lr_at(int epoch, const TrainConfig& config) {
  if (epoch < 0) throw ParameterError("lr_at: epoch " + std::to_string(epoch) + " is negative");
  double lr = config.lr_init;
  for (int m : config.lr_milestones) {
    if (m <= epoch) lr *= config.lr_decay;
  }
  return lr;
}

void write_training_log_csv(std::ostream& out, const std::vector<EpochLog>& log) {
  out << "epoch,lr,l_mse,l_mmd,l_ct,l_cs,total,eval_auc\n";
  for (const auto& e : log) {
    out << e.epoch << ',' << text::csv(e.lr) << ',' << text::csv(e.loss.l_mse) << ',' << text::csv(e.loss.l_mmd) << ','
        << text::csv(e.loss.l_ct) << ',' << text::csv(e.loss.l_cs) << ',' << text::csv(e.loss.total) << ',';
    if (e.eval_auc) out << text::csv(*e.eval_auc);
    out << '\n';
  }
}

}  // namespace ascnet

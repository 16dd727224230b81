#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "ascnet/training.hpp"

namespace ascnet {

enum class AblationVariant {
  Full,
  WithoutBidirTeacher,
  DiagStudentAdj,
  DiagTeacherAdj,
  DiagBothAdj,
  StudentOnly,
  WithoutLD,
  WithoutLMMD,
  WithoutLMSE,
  WithoutDenseConnections,
};

const char* variant_name(AblationVariant v);
/// Accepts the names printed by variant_name; throws ParameterError otherwise.
AblationVariant parse_variant(const std::string& name);
/// Every variant in reporting order (Full last).
std::vector<AblationVariant> all_variants();

/// Rewrites the model structure and loss flags for one variant. The input is
/// expected to describe the full model.
void apply_ablation(AblationVariant variant, ModelConfig& model, LossFlags& loss);

struct EvalReport {
  std::vector<double> per_level_acc;
  double auc = 0.0;
  AblationVariant variant = AblationVariant::Full;
  std::size_t n_test = 0;
  std::uint64_t seed = 0;
};

/// Scores per-level predictions (samples x N) against labels. AUC is the
/// plain mean of the per-level accuracies.
EvalReport score_predictions(const std::vector<std::vector<int>>& predictions, const std::vector<int>& labels);

template <typename Scalar>
EvalReport evaluate(const AscNet<Scalar>& net, const Dataset& test) {
  if (test.empty()) throw ParameterError("evaluate: test set is empty");
  if (test.n_levels != net.config.n_levels || test.feat_dim != net.config.feat_dim ||
      test.n_classes != static_cast<int>(net.config.n_classes)) {
    throw ShapeError("evaluate: data is N=" + std::to_string(test.n_levels) + " D=" + std::to_string(test.feat_dim) +
                     " C=" + std::to_string(test.n_classes) + ", model expects N=" +
                     std::to_string(net.config.n_levels) + " D=" + std::to_string(net.config.feat_dim) +
                     " C=" + std::to_string(net.config.n_classes));
  }
  std::vector<int> labels;
  labels.reserve(test.size());
  for (const auto& s : test.samples) labels.push_back(s.label);
  return score_predictions(predict_all_levels(net, test), labels);
}

/// `level,ratio,accuracy` rows for one report.
void write_curve_csv(std::ostream& out, const EvalReport& report);

/// `variant,seed,auc,acc_1..acc_N` rows.
void write_ablation_csv(std::ostream& out, const std::vector<EvalReport>& reports);

struct VariantSummary {
  AblationVariant variant;
  double mean_auc = 0.0;
  double std_auc = 0.0;  ///< sample standard deviation across seeds; 0 for one seed
  std::size_t runs = 0;
};

std::vector<VariantSummary> summarize(const std::vector<EvalReport>& reports);

struct AblationSettings {
  ModelConfig model;  ///< full-model structure; variants are applied on top
  TrainConfig train;  ///< train.seed is replaced by each suite seed
  LossFlags loss;
  std::vector<AblationVariant> variants = all_variants();
  std::vector<std::uint64_t> seeds{0};
  int jobs = 1;
};

/// Trains and evaluates one (variant, seed) run from scratch.
template <typename Scalar>
EvalReport run_variant(const Dataset& train_data, const Dataset& test_data, const AblationSettings& settings,
                       AblationVariant variant, std::uint64_t seed) {
  ModelConfig mc = settings.model;
  LossFlags flags = settings.loss;
  apply_ablation(variant, mc, flags);
  TrainConfig tc = settings.train;
  tc.seed = seed;
  Rng init = Rng(seed).stream("init");
  auto net = build<Scalar>(mc, init);
  auto result = train<Scalar>(std::move(net), train_data, tc, flags,
                              [&](const AscNet<Scalar>& m) { return evaluate(m, test_data).auc; });
  EvalReport report = evaluate(result.best, test_data);
  report.variant = variant;
  report.seed = seed;
  return report;
}

/// Every variant for every seed, ordered by variant then seed. Runs fan out
/// over `settings.jobs` threads; each run is deterministic on its own.
template <typename Scalar>
std::vector<EvalReport> ablation_suite(const Dataset& train_data, const Dataset& test_data,
                                       const AblationSettings& settings);

extern template std::vector<EvalReport> ablation_suite<float>(const Dataset&, const Dataset&, const AblationSettings&);
extern template std::vector<EvalReport> ablation_suite<double>(const Dataset&, const Dataset&, const AblationSettings&);

}  // namespace ascnet

#include "ascnet/eval.hpp"

#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "text.hpp"

namespace ascnet {

namespace {

struct VariantInfo {
  AblationVariant variant;
  const char* name;
};

// Reporting order; Full closes the table.
constexpr VariantInfo kVariants[] = {
    {AblationVariant::WithoutBidirTeacher, "without_bidir_teacher"},
    {AblationVariant::DiagStudentAdj, "diag_student_adj"},
    {AblationVariant::DiagTeacherAdj, "diag_teacher_adj"},
    {AblationVariant::DiagBothAdj, "diag_both_adj"},
    {AblationVariant::StudentOnly, "student_only"},
    {AblationVariant::WithoutLD, "without_ld"},
    {AblationVariant::WithoutLMMD, "without_lmmd"},
    {AblationVariant::WithoutLMSE, "without_lmse"},
    {AblationVariant::WithoutDenseConnections, "without_dense_connections"},
    {AblationVariant::Full, "full"},
};

}  // namespace

const char* variant_name(AblationVariant v) {
  for (const auto& info : kVariants) {
    if (info.variant == v) return info.name;
  }
  return "unknown";
}

AblationVariant parse_variant(const std::string& name) {
  for (const auto& info : kVariants) {
    if (name == info.name) return info.variant;
  }
  throw ParameterError("unknown ablation variant '" + name + "'");
}

std::vector<AblationVariant> all_variants() {
  std::vector<AblationVariant> out;
  for (const auto& info : kVariants) out.push_back(info.variant);
  return out;
}

void apply_ablation(AblationVariant variant, ModelConfig& model, LossFlags& loss) {
  switch (variant) {
    case AblationVariant::Full:
      return;
    case AblationVariant::WithoutBidirTeacher:
      model.teacher_mask = MaskKind::StudentCausal;
      return;
    case AblationVariant::DiagStudentAdj:
      model.student_mask = MaskKind::Diagonal;
      return;
    case AblationVariant::DiagTeacherAdj:
      model.teacher_mask = MaskKind::Diagonal;
      return;
    case AblationVariant::DiagBothAdj:
      model.teacher_mask = MaskKind::Diagonal;
      model.student_mask = MaskKind::Diagonal;
      return;
    case AblationVariant::StudentOnly:
      model.use_teacher = false;
      model.share_aprime = false;
      loss.use_mse = false;
      loss.use_mmd = false;
      loss.use_teacher_ce = false;
      return;
    case AblationVariant::WithoutLD:
      loss.use_mse = false;
      loss.use_mmd = false;
      return;
    case AblationVariant::WithoutLMMD:
      loss.use_mmd = false;
      return;
    case AblationVariant::WithoutLMSE:
      loss.use_mse = false;
      return;
    case AblationVariant::WithoutDenseConnections:
      model.dense_connections = false;
      return;
  }
  throw ParameterError("apply_ablation: unknown variant");
}

EvalReport score_predictions(const std::vector<std::vector<int>>& predictions, const std::vector<int>& labels) {
  if (predictions.empty()) throw ParameterError("evaluate: no samples to score");
  if (predictions.size() != labels.size()) {
    throw ShapeError("evaluate: " + std::to_string(predictions.size()) + " prediction rows for " +
                     std::to_string(labels.size()) + " labels");
  }
  const std::size_t levels = predictions.front().size();
  if (levels == 0) throw ParameterError("evaluate: predictions have no progress levels");
  std::vector<std::size_t> correct(levels, 0);
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i].size() != levels) throw ShapeError("evaluate: ragged prediction rows");
    for (std::size_t n = 0; n < levels; ++n) correct[n] += predictions[i][n] == labels[i] ? 1 : 0;
  }
  EvalReport r;
  r.n_test = predictions.size();
  double total = 0.0;
  for (std::size_t n = 0; n < levels; ++n) {
    r.per_level_acc.push_back(static_cast<double>(correct[n]) / static_cast<double>(predictions.size()));
    total += r.per_level_acc.back();
  }
  r.auc = total / static_cast<double>(levels);
  return r;
}

void write_curve_csv(std::ostream& out, const EvalReport& report) {
  out << "level,ratio,accuracy\n";
  const auto n_levels = static_cast<Index>(report.per_level_acc.size());
  for (Index n = 1; n <= n_levels; ++n) {
    out << n << ',' << text::csv(progress_ratio(n, n_levels)) << ','
        << text::csv(report.per_level_acc[static_cast<std::size_t>(n - 1)]) << '\n';
  }
}

void write_ablation_csv(std::ostream& out, const std::vector<EvalReport>& reports) {
  out << "variant,seed,auc";
  const std::size_t levels = reports.empty() ? 0 : reports.front().per_level_acc.size();
  for (std::size_t n = 1; n <= levels; ++n) out << ",acc_" << n;
  out << '\n';
  for (const auto& r : reports) {
    out << variant_name(r.variant) << ',' << r.seed << ',' << text::csv(r.auc);
    for (double a : r.per_level_acc) out << ',' << text::csv(a);
    out << '\n';
  }
}

std::vector<VariantSummary> summarize(const std::vector<EvalReport>& reports) {
  std::vector<VariantSummary> out;
  for (auto v : all_variants()) {
    std::vector<double> aucs;
    for (const auto& r : reports) {
      if (r.variant == v) aucs.push_back(r.auc);
    }
    if (aucs.empty()) continue;
    VariantSummary s{v, 0.0, 0.0, aucs.size()};
    for (double a : aucs) s.mean_auc += a;
    s.mean_auc /= static_cast<double>(aucs.size());
    if (aucs.size() > 1) {
      double ss = 0.0;
      for (double a : aucs) ss += (a - s.mean_auc) * (a - s.mean_auc);
      s.std_auc = std::sqrt(ss / static_cast<double>(aucs.size() - 1));
    }
    out.push_back(s);
  }
  return out;
}

template <typename Scalar>
std::vector<EvalReport> ablation_suite(const Dataset& train_data, const Dataset& test_data,
                                       const AblationSettings& settings) {
  if (settings.seeds.empty()) throw ParameterError("ablation_suite: need at least one seed");
  if (settings.variants.empty()) throw ParameterError("ablation_suite: need at least one variant");
  struct Job {
    AblationVariant variant;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (auto v : settings.variants) {
    for (auto s : settings.seeds) jobs.push_back({v, s});
  }
  std::vector<EvalReport> reports(jobs.size());
  const auto workers = static_cast<std::size_t>(std::max(1, settings.jobs));
  if (workers == 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      reports[i] = run_variant<Scalar>(train_data, test_data, settings, jobs[i].variant, jobs[i].seed);
    }
    return reports;
  }

  std::mutex mutex;
  std::size_t next = 0;
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard lock(mutex);
        if (next >= jobs.size() || failure) return;
        i = next++;
      }
      try {
        reports[i] = run_variant<Scalar>(train_data, test_data, settings, jobs[i].variant, jobs[i].seed);
      } catch (...) {
        std::lock_guard lock(mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < std::min(workers, jobs.size()); ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
  return reports;
}

template std::vector<EvalReport> ablation_suite<float>(const Dataset&, const Dataset&, const AblationSettings&);
template std::vector<EvalReport> ablation_suite<double>(const Dataset&, const Dataset&, const AblationSettings&);

}  // namespace ascnet

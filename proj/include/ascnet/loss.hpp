#pragma once

#include <vector>

#include "ascnet/model.hpp"

namespace ascnet {

/// Which objective terms are active. The ablation variants toggle these.
struct LossFlags {
  bool use_mse = true;
  bool use_mmd = true;
  bool use_teacher_ce = true;
  /// Treat teacher features as constants inside the distillation terms.
  bool detach_teacher_in_distill = false;

  bool operator==(const LossFlags&) const = default;
};

struct LossReport {
  double l_mse = 0.0;
  double l_mmd = 0.0;
  double l_ct = 0.0;
  double l_cs = 0.0;
  double total = 0.0;
};

template <typename Scalar>
struct LossTerms {
  Var<Scalar> mse;
  Var<Scalar> mmd;
  Var<Scalar> ct;
  Var<Scalar> cs;
  Var<Scalar> total;

  LossReport report() const {
    auto v = [](const Var<Scalar>& x) { return static_cast<double>(x.value()(0, 0)); };
    return {v(mse), v(mmd), v(ct), v(cs), v(total)};
  }
};

namespace detail {

template <typename Scalar>
Var<Scalar> zero_scalar(Tape<Scalar>& tape) {
  return tape.constant(Matrix<Scalar>::Zero(1, 1));
}

template <typename Scalar>
void require_paired_layers(const char* op, const ForwardTrace<Scalar>& trace) {
  if (trace.f_s.size() != trace.f_t.size()) {
    throw ShapeError(std::string(op) + ": student has " + std::to_string(trace.f_s.size()) +
                     " distilled layers, teacher has " + std::to_string(trace.f_t.size()));
  }
}

/// Per-sample sum over layers of ||term(layer)||_F, averaged over the batch.
template <typename Scalar, typename Term>
Var<Scalar> distill_sum(const ForwardTrace<Scalar>& trace, bool detach_teacher, Term term) {
  Tape<Scalar>& tape = trace.logits_s.tape();
  Var<Scalar> acc = zero_scalar(tape);
  const Scalar inv_batch = Scalar(1) / static_cast<Scalar>(trace.batch_size());
  for (std::size_t l = 0; l < trace.f_s.size(); ++l) {
    Var<Scalar> teacher = detach_teacher ? detach(trace.f_t[l]) : trace.f_t[l];
    acc = acc + scale(sum(block_frobenius(term(trace.f_s[l], teacher), trace.block_rows)), inv_batch);
  }
  return acc;
}

}  // namespace detail

/// Σ_l ||F_ls - F_lt||_F per sample, averaged over the batch.
template <typename Scalar>
Var<Scalar> mse_distill(const ForwardTrace<Scalar>& trace, bool detach_teacher = false) {
  detail::require_paired_layers("mse_distill", trace);
  return detail::distill_sum(trace, detach_teacher, [](const Var<Scalar>& s, const Var<Scalar>& t) {
    detail::require_same_shape("mse_distill", s, t);
    return s - t;
  });
}

/// Σ_l ||F_ls F_ls^T - F_lt F_lt^T||_F over the N progress-level rows of each
/// sample, averaged over the batch.
template <typename Scalar>
Var<Scalar> mmd_distill(const ForwardTrace<Scalar>& trace, bool detach_teacher = false) {
  detail::require_paired_layers("mmd_distill", trace);
  const Index n = trace.block_rows;
  return detail::distill_sum(trace, detach_teacher, [n](const Var<Scalar>& s, const Var<Scalar>& t) {
    if (s.rows() != t.rows()) {
      throw ShapeError("mmd_distill: row counts differ, " + std::to_string(s.rows()) + " vs " +
                       std::to_string(t.rows()));
    }
    return block_gram(s, n) - block_gram(t, n);
  });
}

/// Expands one label per sample to one label per progress-level row.
std::vector<int> expand_labels(const std::vector<int>& labels, Index n_levels);

/// Cross-entropy of every progress-level row against its sample's label,
/// summed over levels and averaged over the batch. Returns {teacher, student};
/// the teacher term is 0 when the trace has no teacher.
template <typename Scalar>
std::pair<Var<Scalar>, Var<Scalar>> classification(const ForwardTrace<Scalar>& trace, const std::vector<int>& labels) {
  if (static_cast<Index>(labels.size()) != trace.batch_size()) {
    throw ShapeError("classification: " + std::to_string(labels.size()) + " labels for a batch of " +
                     std::to_string(trace.batch_size()));
  }
  const Index classes = trace.scores_s.cols();
  for (int y : labels) {
    if (y < 0 || y >= classes) {
      throw ParameterError("classification: label " + std::to_string(y) + " outside [0, " + std::to_string(classes) +
                           ")");
    }
  }
  const auto rows = expand_labels(labels, trace.block_rows);
  const Scalar inv_batch = Scalar(1) / static_cast<Scalar>(labels.size());
  Var<Scalar> cs = scale(cross_entropy_rows(trace.scores_s, rows), inv_batch);
  Var<Scalar> ct = trace.has_teacher() ? scale(cross_entropy_rows(trace.scores_t, rows), inv_batch)
                                       : detail::zero_scalar(trace.logits_s.tape());
  return {ct, cs};
}

/// L = L_MSE + L_MMD + L_CT + L_CS with the disabled terms reported as 0.
template <typename Scalar>
LossTerms<Scalar> total_loss(const ForwardTrace<Scalar>& trace, const std::vector<int>& labels,
                             const LossFlags& flags) {
  Tape<Scalar>& tape = trace.logits_s.tape();
  LossTerms<Scalar> terms;
  const bool distill = trace.has_teacher();
  terms.mse = distill && flags.use_mse ? mse_distill(trace, flags.detach_teacher_in_distill) : detail::zero_scalar(tape);
  terms.mmd = distill && flags.use_mmd ? mmd_distill(trace, flags.detach_teacher_in_distill) : detail::zero_scalar(tape);
  auto [ct, cs] = classification(trace, labels);
  terms.ct = flags.use_teacher_ce ? ct : detail::zero_scalar(tape);
  terms.cs = cs;
  terms.total = ((terms.mse + terms.mmd) + terms.ct) + terms.cs;
  return terms;
}

}  // namespace ascnet

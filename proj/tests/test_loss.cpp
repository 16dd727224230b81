#include <gtest/gtest.h>

#include <cmath>

#include "ascnet/eval.hpp"
#include "ascnet/verification.hpp"
#include "test_util.hpp"

using namespace ascnet;
using ascnet::testing::random_matrix;

namespace {

// A hand-built trace: B samples of n rows, `width` features per layer.
ForwardTrace<double> make_trace(Tape<double>& t, Rng& rng, Index batch, Index n, Index width, Index classes) {
  ForwardTrace<double> tr;
  tr.block_rows = n;
  for (int l = 0; l < 2; ++l) {
    tr.f_t.push_back(t.variable(random_matrix(batch * n, width, rng)));
    tr.f_s.push_back(t.variable(random_matrix(batch * n, width, rng)));
  }
  tr.scores_t = t.variable(random_matrix(batch * n, classes, rng));
  tr.scores_s = t.variable(random_matrix(batch * n, classes, rng));
  tr.logits_t = softmax_rows(tr.scores_t);
  tr.logits_s = softmax_rows(tr.scores_s);
  return tr;
}

Matrix<double> random_orthogonal(Index n, Rng& rng) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(random_matrix(n, n, rng));
  return qr.householderQ();
}

double scalar_frobenius(const Matrix<double>& m) {
  double s = 0.0;
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) s += m(i, j) * m(i, j);
  return std::sqrt(s);
}

}  // namespace

TEST(Mse, ThreeFourFive) {
  Tape<double> t;
  ForwardTrace<double> tr;
  tr.block_rows = 1;
  Matrix<double> s(1, 2), z = Matrix<double>::Zero(1, 2);
  s << 3, 4;
  tr.f_s = {t.constant(s)};
  tr.f_t = {t.constant(z)};
  tr.logits_s = t.constant(Matrix<double>::Ones(1, 2));
  EXPECT_DOUBLE_EQ(mse_distill(tr).value()(0, 0), 5.0);
}

TEST(Mse, IdenticalTracesGiveZero) {
  Rng rng(1);
  Tape<double> t;
  auto tr = make_trace(t, rng, 2, 3, 4, 3);
  tr.f_s = tr.f_t;
  EXPECT_EQ(mse_distill(tr).value()(0, 0), 0.0);
  EXPECT_EQ(mmd_distill(tr).value()(0, 0), 0.0);
}

TEST(Mse, MatchesScalarOracleAveragedOverBatch) {
  Rng rng(2);
  Tape<double> t;
  auto tr = make_trace(t, rng, 3, 4, 5, 3);
  double expected = 0.0;
  for (Index b = 0; b < 3; ++b)
    for (int l = 0; l < 2; ++l) {
      expected += scalar_frobenius(tr.f_s[l].value().middleRows(b * 4, 4) - tr.f_t[l].value().middleRows(b * 4, 4));
    }
  EXPECT_NEAR(mse_distill(tr).value()(0, 0), expected / 3.0, 1e-12);
}

TEST(Mmd, MatchesExplicitGram) {
  Tape<double> t;
  ForwardTrace<double> tr;
  tr.block_rows = 2;
  Matrix<double> fs(2, 2), ft(2, 2);
  fs << 1, 2, 3, 4;
  ft << 0, 1, 1, 0;
  tr.f_s = {t.constant(fs)};
  tr.f_t = {t.constant(ft)};
  tr.logits_s = t.constant(Matrix<double>::Ones(2, 2));
  // fs fs^T = [[5,11],[11,25]], ft ft^T = I
  Matrix<double> diff(2, 2);
  diff << 4, 11, 11, 24;
  EXPECT_NEAR(mmd_distill(tr).value()(0, 0), scalar_frobenius(diff), 1e-12);
}

TEST(Mmd, InvariantUnderOrthogonalRightMultiplication) {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    Tape<double> t;
    auto tr = make_trace(t, rng, 2, 5, 6, 3);
    const double base = mmd_distill(tr).value()(0, 0);
    const Matrix<double> q = random_orthogonal(6, rng), q2 = random_orthogonal(6, rng);
    for (int l = 0; l < 2; ++l) {
      tr.f_s[l] = t.constant(tr.f_s[l].value() * q);
      tr.f_t[l] = t.constant(tr.f_t[l].value() * q2);
    }
    EXPECT_NEAR(mmd_distill(tr).value()(0, 0), base, 1e-8);
  }
}

TEST(Mmd, GradientMatchesFiniteDifferences) {
  Rng rng(4);
  const double err = ascnet::testing::op_gradient_error(
      {random_matrix(6, 3, rng), random_matrix(6, 3, rng)}, [](auto& v) {
        ForwardTrace<double> tr;
        tr.block_rows = 3;
        tr.f_s = {v[0]};
        tr.f_t = {v[1]};
        tr.logits_s = v[0];
        return mmd_distill(tr) + mse_distill(tr);
      });
  EXPECT_LT(err, 1e-6);
}

TEST(Distill, LayerCountMismatchIsShapeError) {
  Rng rng(5);
  Tape<double> t;
  auto tr = make_trace(t, rng, 1, 3, 2, 2);
  tr.f_t.pop_back();
  EXPECT_THROW(mse_distill(tr), ShapeError);
  EXPECT_THROW(mmd_distill(tr), ShapeError);
}

TEST(Distill, DetachedTeacherReceivesNoGradient) {
  Rng rng(6);
  Tape<double> t;
  auto tr = make_trace(t, rng, 2, 3, 4, 3);
  t.backward(mse_distill(tr, true) + mmd_distill(tr, true));
  EXPECT_TRUE(tr.f_t[0].grad().isZero(0));
  EXPECT_FALSE(tr.f_s[0].grad().isZero(0));
}

TEST(Classification, UniformLogitsGiveNLnC) {
  for (Index n : {1, 4, 10}) {
    for (Index c : {2, 6, 101}) {
      Tape<double> t;
      ForwardTrace<double> tr;
      tr.block_rows = n;
      tr.scores_s = t.constant(Matrix<double>::Zero(2 * n, c));
      tr.scores_t = tr.scores_s;
      tr.logits_s = softmax_rows(tr.scores_s);
      tr.logits_t = tr.logits_s;
      tr.f_t = {tr.scores_t};
      tr.f_s = {tr.scores_s};
      auto [ct, cs] = classification(tr, {0, static_cast<int>(c - 1)});
      EXPECT_NEAR(cs.value()(0, 0), static_cast<double>(n) * std::log(static_cast<double>(c)), 1e-10);
      EXPECT_NEAR(ct.value()(0, 0), static_cast<double>(n) * std::log(static_cast<double>(c)), 1e-10);
    }
  }
}

TEST(Classification, ConfidentCorrectGivesZero) {
  Tape<double> t;
  ForwardTrace<double> tr;
  tr.block_rows = 2;
  Matrix<double> s = Matrix<double>::Constant(2, 3, -1e4);
  s.col(1).setZero();
  tr.scores_s = t.constant(s);
  tr.logits_s = softmax_rows(tr.scores_s);
  auto [ct, cs] = classification(tr, {1});
  EXPECT_EQ(cs.value()(0, 0), 0.0);
  EXPECT_EQ(ct.value()(0, 0), 0.0);
}

TEST(Classification, MatchesScalarOracle) {
  Rng rng(7);
  Tape<double> t;
  auto tr = make_trace(t, rng, 2, 3, 2, 4);
  const std::vector<int> labels{3, 1};
  auto [ct, cs] = classification(tr, labels);
  auto oracle = [&](const Matrix<double>& s) {
    double total = 0.0;
    for (Index r = 0; r < s.rows(); ++r) {
      double z = 0.0;
      for (Index j = 0; j < s.cols(); ++j) z += std::exp(s(r, j));
      total += std::log(z) - s(r, labels[static_cast<std::size_t>(r / 3)]);
    }
    return total / 2.0;
  };
  EXPECT_NEAR(cs.value()(0, 0), oracle(tr.scores_s.value()), 1e-12);
  EXPECT_NEAR(ct.value()(0, 0), oracle(tr.scores_t.value()), 1e-12);
}

TEST(Classification, LabelErrors) {
  Rng rng(8);
  Tape<double> t;
  auto tr = make_trace(t, rng, 2, 3, 2, 4);
  EXPECT_THROW(classification(tr, {0, 4}), ParameterError);
  EXPECT_THROW(classification(tr, {0, -1}), ParameterError);
  EXPECT_THROW(classification(tr, {0}), ShapeError);
}

TEST(Total, AdditiveAndNonNegative) {
  Rng rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    Tape<double> t;
    auto tr = make_trace(t, rng, 2, 3, 4, 3);
    const auto r = total_loss(tr, {0, 2}, LossFlags{}).report();
    EXPECT_NEAR(r.total, r.l_mse + r.l_mmd + r.l_ct + r.l_cs, 1e-12);
    for (double v : {r.l_mse, r.l_mmd, r.l_ct, r.l_cs}) EXPECT_GE(v, 0.0);
  }
}

TEST(Total, AblationFlagsZeroTheRightTerms) {
  Rng rng(10);
  Tape<double> t;
  auto tr = make_trace(t, rng, 2, 3, 4, 3);
  const std::vector<int> labels{1, 2};
  const auto full = total_loss(tr, labels, LossFlags{}).report();
  auto run = [&](AblationVariant v) {
    ModelConfig mc = tiny_model_config();
    LossFlags flags;
    apply_ablation(v, mc, flags);
    return total_loss(tr, labels, flags).report();
  };
  const auto no_ld = run(AblationVariant::WithoutLD);
  EXPECT_EQ(no_ld.l_mse, 0.0);
  EXPECT_EQ(no_ld.l_mmd, 0.0);
  EXPECT_NEAR(no_ld.total, full.l_ct + full.l_cs, 1e-12);
  const auto no_mmd = run(AblationVariant::WithoutLMMD);
  EXPECT_EQ(no_mmd.l_mmd, 0.0);
  EXPECT_NEAR(no_mmd.total, full.total - full.l_mmd, 1e-12);
  const auto no_mse = run(AblationVariant::WithoutLMSE);
  EXPECT_EQ(no_mse.l_mse, 0.0);
  EXPECT_NEAR(no_mse.total, full.total - full.l_mse, 1e-12);
}

TEST(Total, StudentOnlyReducesToStudentCrossEntropy) {
  ModelConfig mc = tiny_model_config();
  LossFlags flags;
  apply_ablation(AblationVariant::StudentOnly, mc, flags);
  Rng rng(11);
  auto net = build<double>(mc, rng);
  Tape<double> t;
  auto params = bind_parameters(net, t, true);
  auto trace = forward<double>(net, params, t.constant(random_matrix(8, 8, rng)), ComputeMode::Eval, nullptr);
  const auto r = total_loss(trace, {0, 1}, flags).report();
  EXPECT_EQ(r.l_ct, 0.0);
  EXPECT_EQ(r.l_mse, 0.0);
  EXPECT_EQ(r.l_mmd, 0.0);
  EXPECT_EQ(r.total, r.l_cs);
  EXPECT_GT(r.l_cs, 0.0);
}

TEST(Total, WholeModelGradientCheck) {
  for (auto v : {AblationVariant::Full, AblationVariant::StudentOnly, AblationVariant::WithoutDenseConnections}) {
    ModelConfig mc = tiny_model_config();
    LossFlags flags;
    apply_ablation(v, mc, flags);
    EXPECT_LT(check_model_gradients(mc, flags, 3, 1e-6).max_relative_error, 1e-4) << variant_name(v);
  }
}

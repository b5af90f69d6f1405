#include <gtest/gtest.h>

#include <cmath>

#include "slim/error.hpp"
#include "slim/objective.hpp"
#include "test_util.hpp"

namespace slim {
namespace {

MatD row(std::initializer_list<double> v) {
  MatD m(1, static_cast<Eigen::Index>(v.size()));
  int i = 0;
  for (double x : v) m(0, i++) = x;
  return m;
}

MatD random_mat(int rows, int cols, Rng& rng, double scale = 1.0) {
  MatD m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
  return m;
}

TubeMask mask_of(int n, std::initializer_list<int> cells) {
  auto m = empty_mask({1, n});
  for (int c : cells) m.cells[c] = 1;
  m.count = static_cast<int>(cells.size());
  return m;
}

// Plain-space Sinkhorn written directly from the definition.
MatD sinkhorn_oracle(const MatD& logits, double temp, int iters) {
  const int b = static_cast<int>(logits.rows()), k = static_cast<int>(logits.cols());
  MatD q = (logits.array() / temp).exp();
  q /= q.sum();
  for (int it = 0; it < iters; ++it) {
    for (int c = 0; c < k; ++c) q.col(c) *= (1.0 / k) / q.col(c).sum();
    for (int r = 0; r < b; ++r) q.row(r) *= (1.0 / b) / q.row(r).sum();
  }
  for (int r = 0; r < b; ++r) q.row(r) /= q.row(r).sum();
  return q;
}

TEST(Softmax, HandValues) {
  const auto p = softmax_temp(row({1.0, 0.0}), 1.0);
  EXPECT_NEAR(p(0, 0), 0.7311, 1e-4);
  EXPECT_NEAR(p(0, 1), 0.2689, 1e-4);
  EXPECT_NEAR(p(0, 0), std::exp(1.0) / (std::exp(1.0) + 1.0), 1e-15);
}

TEST(Softmax, UniformAndLowTemperature) {
  const auto u = softmax_temp(MatD::Constant(2, 7, 3.3), 0.1);
  for (int i = 0; i < 7; ++i) EXPECT_NEAR(u(1, i), 1.0 / 7, 1e-15);
  const auto p = softmax_temp(row({0.3, 0.9, 0.5}), 1e-3);
  EXPECT_GT(p(0, 1), 0.999);
  const auto big = softmax_temp(row({1e4, 0.0}), 0.04);
  EXPECT_TRUE(big.allFinite());
  const auto lp = log_softmax_temp(row({0.2, -0.4, 1.1}), 0.5);
  const auto sp = softmax_temp(row({0.2, -0.4, 1.1}), 0.5);
  EXPECT_LT((lp.array().exp() - sp.array()).abs().maxCoeff(), 1e-15);
}

TEST(Sinkhorn, SingleRowIsSoftmax) {
  const auto l = row({0.1, -0.3, 0.8, 0.0});
  EXPECT_LT((sinkhorn_center(l, 0.04, 3) - softmax_temp(l, 0.04)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Sinkhorn, UniformLogitsGiveUniformRows) {
  const auto q = sinkhorn_center(MatD::Constant(6, 9, 0.25), 0.04, 3);
  EXPECT_LT((q.array() - 1.0 / 9).abs().maxCoeff(), 1e-12);
}

TEST(Sinkhorn, MatchesPlainIterationAndMarginals) {
  Rng rng(1);
  const MatD l = random_mat(4, 5, rng);
  const auto q = sinkhorn_center(l, 1.0, 3);
  EXPECT_LT((q - sinkhorn_oracle(l, 1.0, 3)).cwiseAbs().maxCoeff(), 1e-12);
  for (int r = 0; r < 4; ++r) EXPECT_NEAR(q.row(r).sum(), 1.0, 1e-6);
  for (int c = 0; c < 5; ++c) EXPECT_NEAR(q.col(c).sum(), 4.0 / 5.0, 0.05 * 4.0 / 5.0);
}

TEST(Sinkhorn, ShiftInvariantAndStableAtLowTemperature) {
  Rng rng(2);
  const MatD l = random_mat(8, 16, rng);
  const auto a = sinkhorn_center(l, 0.04, 3);
  const auto b = sinkhorn_center((l.array() + 7.5).matrix(), 0.04, 3);
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-10);
  const auto c = sinkhorn_center(l * 100.0, 0.04, 3);
  EXPECT_TRUE(c.allFinite());
}

TEST(Mfm, HandValues) {
  const auto uniform4 = MatD::Constant(3, 4, 0.25);
  const MatD logu = uniform4.array().log();
  EXPECT_NEAR(mfm_loss(uniform4, logu, mask_of(3, {0, 2}), Reduction::Mean), std::log(4.0), 1e-12);
  EXPECT_NEAR(mfm_loss(uniform4, logu, mask_of(3, {0, 2}), Reduction::Sum), 2 * std::log(4.0), 1e-12);

  MatD t(1, 2), s(1, 2);
  t << 0.5, 0.5;
  s << std::log(0.9), std::log(0.1);
  EXPECT_NEAR(mfm_loss(t, s, mask_of(1, {0}), Reduction::Mean), 1.2040, 1e-4);

  MatD onehot = MatD::Zero(2, 3);
  onehot(1, 2) = 1.0;
  MatD sl = MatD::Constant(2, 3, std::log(0.2));
  sl(1, 2) = std::log(0.6);
  EXPECT_NEAR(mfm_loss(onehot, sl, mask_of(2, {1}), Reduction::Mean), -std::log(0.6), 1e-12);
}

TEST(Mfm, OnlyMaskedRowsCount) {
  Rng rng(3);
  const auto t = softmax_temp(random_mat(5, 6, rng), 1.0);
  const auto s = log_softmax_temp(random_mat(5, 6, rng), 1.0);
  auto t2 = t;
  t2.row(1) = softmax_temp(random_mat(1, 6, rng), 1.0);
  const auto m = mask_of(5, {0, 3});
  EXPECT_EQ(mfm_loss(t, s, m, Reduction::Mean), mfm_loss(t2, s, m, Reduction::Mean));
  EXPECT_THROW(mfm_loss(t, s, mask_of(5, {}), Reduction::Mean), ValidationError);
}

TEST(Mfm, SelfConsistencyLowerBound) {
  Rng rng(4);
  const auto p = softmax_temp(random_mat(4, 7, rng), 0.5);
  const MatD lp = p.array().log();
  const double entropy = -(p.array() * lp.array()).rowwise().sum().mean();
  EXPECT_NEAR(mfm_loss(p, lp, mask_of(4, {0, 1, 2, 3}), Reduction::Mean), entropy, 1e-12);
  const auto other = log_softmax_temp(random_mat(4, 7, rng), 0.5);
  EXPECT_GT(mfm_loss(p, other, mask_of(4, {0, 1, 2, 3}), Reduction::Mean), entropy);
}

TEST(Glcl, HandValues) {
  const MatD u8 = MatD::Constant(1, 8, 1.0 / 8);
  const MatD lu8 = u8.array().log();
  EXPECT_NEAR(glcl_loss(u8, {lu8}, Reduction::Sum), std::log(8.0), 1e-12);
  EXPECT_NEAR(glcl_loss(u8, {lu8}, Reduction::Sum), 2.0794, 1e-4);
  EXPECT_NEAR(glcl_loss(u8, std::vector<MatD>(7, lu8), Reduction::Sum), 7 * std::log(8.0), 1e-12);
  EXPECT_NEAR(glcl_loss(u8, std::vector<MatD>(7, lu8), Reduction::Mean), std::log(8.0), 1e-12);

  const MatD t = row({1.0, 0.0});
  const MatD a = row({std::log(0.5), std::log(0.5)});
  const MatD b = row({std::log(0.25), std::log(0.75)});
  EXPECT_NEAR(glcl_loss(t, {a, b}, Reduction::Sum), 2.0794, 1e-4);
  EXPECT_NEAR(glcl_loss(t, {a, b}, Reduction::Sum), -std::log(0.5) - std::log(0.25), 1e-12);
  EXPECT_THROW(glcl_loss(t, {}, Reduction::Sum), ValidationError);
}

TEST(Koleo, HandValues) {
  MatD anti(2, 3);
  anti << 1, 0, 0, -1, 0, 0;
  EXPECT_NEAR(koleo_loss(anti), -std::log(2.0), 1e-9);
  MatD same(2, 3);
  same << 0.3, 0.4, 0.5, 0.3, 0.4, 0.5;
  EXPECT_NEAR(koleo_loss(same), -std::log(1e-8), 1e-6);
  EXPECT_NEAR(koleo_loss(same), 18.42, 0.01);
  EXPECT_THROW(koleo_loss(MatD::Ones(1, 3)), ValidationError);
}

TEST(Koleo, ScaleInvariantRows) {
  Rng rng(5);
  const MatD f = random_mat(6, 4, rng);
  MatD g = f;
  for (int r = 0; r < 6; ++r) g.row(r) *= 0.1 + r;
  EXPECT_NEAR(koleo_loss(f), koleo_loss(g), 1e-12);
}

TEST(Koleo, GradientMatchesFiniteDifferences) {
  Rng rng(6);
  MatD f = random_mat(5, 4, rng);
  MatD grad;
  koleo_loss(f, &grad);
  const double h = 1e-6;
  for (int r = 0; r < 5; ++r)
    for (int c = 0; c < 4; ++c) {
      MatD up = f, dn = f;
      up(r, c) += h;
      dn(r, c) -= h;
      EXPECT_NEAR(grad(r, c), (koleo_loss(up) - koleo_loss(dn)) / (2 * h), 1e-6);
    }
}

TEST(CrossEntropy, LogitGradientMatchesFiniteDifferences) {
  Rng rng(7);
  const MatD t = softmax_temp(random_mat(3, 5, rng), 1.0);
  MatD l = random_mat(3, 5, rng);
  const double temp = 0.1;
  const auto ce = [&](const MatD& x) { return -(t.array() * log_softmax_temp(x, temp).array()).sum(); };
  const MatD g = cross_entropy_logit_grad(t, l, temp);
  const double h = 1e-6;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 5; ++c) {
      MatD up = l, dn = l;
      up(r, c) += h;
      dn(r, c) -= h;
      EXPECT_NEAR(g(r, c), (ce(up) - ce(dn)) / (2 * h), 1e-5);
    }
}

TEST(TotalLoss, Composition) {
  DistillConfig cfg;
  const auto p = total_loss({1.0, 3.0}, {4.0, 6.0}, 0.5, cfg);
  EXPECT_DOUBLE_EQ(p.mfm, 2.0);
  EXPECT_DOUBLE_EQ(p.glcl, 5.0);
  EXPECT_DOUBLE_EQ(p.koleo, 0.5);
  EXPECT_DOUBLE_EQ(p.total, 2.0 + 5.0 + 0.05);
  cfg.lambda_glcl = 0.0;
  cfg.koleo_weight = 0.0;
  EXPECT_DOUBLE_EQ(total_loss({1.0, 3.0}, {4.0, 6.0}, 0.5, cfg).total, 2.0);
  cfg.lambda_glcl = 2.0;
  EXPECT_DOUBLE_EQ(total_loss({1.0, 3.0}, {4.0, 6.0}, 0.5, cfg).total, 2.0 + 10.0);
}

ModelParams<double> filled(const ModelParams<double>& like, double v) {
  auto out = like;
  for (auto& r : param_refs(out)) r.value->setConstant(v);
  return out;
}

TEST(Ema, HandValuesAndAffinity) {
  ModelConfig cfg = ModelConfig::tiny();
  cfg.layers = 1;
  Rng rng(8);
  const auto shape = cast_params<double>(allocate_model(cfg));
  auto teacher = filled(shape, 2.0);
  auto student = filled(shape, 4.0);
  ema_update(teacher, student, 0.5);
  for (auto& r : param_refs(teacher)) EXPECT_TRUE((r.value->array() == 3.0).all()) << r.name;

  auto t1 = filled(shape, 2.0);
  ema_update(t1, student, 1.0);
  for (auto& r : param_refs(t1)) EXPECT_TRUE((r.value->array() == 2.0).all());
  ema_update(t1, student, 0.0);
  for (auto& r : param_refs(t1)) EXPECT_TRUE((r.value->array() == 4.0).all());

  auto twice = filled(shape, 2.0), once = filled(shape, 2.0);
  ema_update(twice, student, 0.9);
  ema_update(twice, student, 0.9);
  ema_update(once, student, 0.81);
  auto a = param_refs(twice), b = param_refs(once);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_LT((*a[i].value - *b[i].value).cwiseAbs().maxCoeff(), 1e-12);

  ModelConfig other = cfg;
  other.dim = 16;
  other.heads = 2;
  auto mismatched = cast_params<double>(allocate_model(other));
  EXPECT_THROW(ema_update(mismatched, student, 0.5), ValidationError);
}

}  // namespace
}  // namespace slim

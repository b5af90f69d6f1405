#include "slim/objective.hpp"

#include <cmath>
#include <limits>

#include "slim/error.hpp"

namespace slim {
namespace {

double logsumexp(const Eigen::Ref<const Eigen::Matrix<double, 1, Eigen::Dynamic>>& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

}  // namespace

std::string to_string(Reduction r) { return r == Reduction::Mean ? "mean" : "sum"; }
std::string to_string(KoleoTarget t) { return t == KoleoTarget::Cls ? "cls" : "patch_mean"; }

void DistillConfig::validate() const {
  if (!(student_temp > 0.0 && teacher_temp > 0.0))
    throw ValidationError("temperatures must be positive");
  if (sinkhorn_iters < 0) throw ValidationError("sinkhorn_iters must be >= 0");
  if (koleo_weight < 0.0 || lambda_glcl < 0.0)
    throw ValidationError("loss weights must be non-negative");
}

MatD softmax_temp(const MatD& logits, double temp) {
  MatD out = log_softmax_temp(logits, temp);
  return out.array().exp().matrix();
}

MatD log_softmax_temp(const MatD& logits, double temp) {
  if (!(temp > 0.0)) throw ValidationError("softmax temperature must be positive");
  MatD s = logits / temp;
  for (int i = 0; i < s.rows(); ++i) s.row(i).array() -= logsumexp(s.row(i));
  return s;
}

MatD sinkhorn_center(const MatD& logits, double temp, int iters) {
  if (logits.rows() < 1) throw ValidationError("sinkhorn needs at least one row");
  if (logits.rows() == 1) return softmax_temp(logits, temp);
  const double b = static_cast<double>(logits.rows());
  const double k = static_cast<double>(logits.cols());
  MatD l = logits / temp;
  {
    const double m = l.maxCoeff();
    l.array() -= m + std::log((l.array() - m).exp().sum());
  }
  for (int it = 0; it < iters; ++it) {
    for (int c = 0; c < l.cols(); ++c) {
      const double m = l.col(c).maxCoeff();
      const double lse = m + std::log((l.col(c).array() - m).exp().sum());
      l.col(c).array() -= lse + std::log(k);
    }
    for (int r = 0; r < l.rows(); ++r) l.row(r).array() -= logsumexp(l.row(r)) + std::log(b);
  }
  for (int r = 0; r < l.rows(); ++r) l.row(r).array() -= logsumexp(l.row(r));
  return l.array().exp().matrix();
}

double mfm_loss(const MatD& teacher_probs, const MatD& student_logprobs, const TubeMask& mask,
                Reduction reduction) {
  if (teacher_probs.rows() != student_logprobs.rows() ||
      teacher_probs.cols() != student_logprobs.cols())
    throw ValidationError("mfm_loss: teacher and student shapes differ");
  if (teacher_probs.rows() != mask.grid.size())
    throw ValidationError("mfm_loss: mask grid does not match token count");
  if (mask.count == 0) throw ValidationError("mfm_loss: empty mask");
  double sum = 0.0;
  for (int i = 0; i < mask.grid.size(); ++i)
    if (mask.cells[i]) sum -= teacher_probs.row(i).dot(student_logprobs.row(i));
  return reduction == Reduction::Mean ? sum / mask.count : sum;
}

double glcl_loss(const MatD& teacher_probs, const std::vector<MatD>& student_logprobs,
                 Reduction reduction) {
  if (student_logprobs.empty()) throw ValidationError("glcl_loss: no student views");
  double sum = 0.0;
  for (const auto& s : student_logprobs) {
    if (s.cols() != teacher_probs.cols() || s.rows() != 1 || teacher_probs.rows() != 1)
      throw ValidationError("glcl_loss: distributions must be 1 x K");
    sum -= teacher_probs.row(0).dot(s.row(0));
  }
  return reduction == Reduction::Mean ? sum / static_cast<double>(student_logprobs.size()) : sum;
}

double koleo_loss(const MatD& features, MatD* grad, double eps) {
  const int b = static_cast<int>(features.rows());
  if (b < 2) throw ValidationError("koleo_loss needs at least two rows");
  Eigen::VectorXd norms = features.rowwise().norm();
  MatD n = features;
  for (int i = 0; i < b; ++i) n.row(i) /= std::max(norms(i), 1e-12);
  MatD dn = MatD::Zero(b, features.cols());
  double loss = 0.0;
  for (int i = 0; i < b; ++i) {
    int nn = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int j = 0; j < b; ++j) {
      if (j == i) continue;
      const double dist = (n.row(i) - n.row(j)).norm();
      if (dist < best) {
        best = dist;
        nn = j;
      }
    }
    loss -= std::log(std::max(best, eps)) / b;
    if (grad && best > eps) {
      const Eigen::Matrix<double, 1, Eigen::Dynamic> u = (n.row(i) - n.row(nn)) / best;
      const double coef = -1.0 / (b * best);
      dn.row(i) += coef * u;
      dn.row(nn) -= coef * u;
    }
  }
  if (grad) {
    grad->resize(b, features.cols());
    for (int i = 0; i < b; ++i) {
      const double proj = dn.row(i).dot(n.row(i));
      grad->row(i) = (dn.row(i) - proj * n.row(i)) / std::max(norms(i), 1e-12);
    }
  }
  return loss;
}

MatD cross_entropy_logit_grad(const MatD& teacher_probs, const MatD& student_logits, double temp) {
  MatD g = softmax_temp(student_logits, temp);
  for (int i = 0; i < g.rows(); ++i) g.row(i) *= teacher_probs.row(i).sum();
  return (g - teacher_probs) / temp;
}

LossParts total_loss(const std::array<double, 2>& mfm, const std::array<double, 2>& glcl,
                     double koleo, const DistillConfig& cfg) {
  LossParts p;
  p.mfm = 0.5 * (mfm[0] + mfm[1]);
  p.glcl = 0.5 * (glcl[0] + glcl[1]);
  p.koleo = koleo;
  p.total = p.mfm + cfg.lambda_glcl * p.glcl + cfg.koleo_weight * p.koleo;
  return p;
}

template <typename S>
void ema_update(ModelParams<S>& teacher, ModelParams<S>& student, double tau) {
  auto t = param_refs(teacher);
  auto s = param_refs(student);
  if (t.size() != s.size()) throw ValidationError("ema_update: parameter lists differ");
  const S a = static_cast<S>(tau), b = static_cast<S>(1.0 - tau);
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i].value->rows() != s[i].value->rows() || t[i].value->cols() != s[i].value->cols())
      throw ValidationError("ema_update: shape mismatch for " + t[i].name);
    *t[i].value = a * *t[i].value + b * *s[i].value;
  }
}

template void ema_update(ModelParams<float>&, ModelParams<float>&, double);
template void ema_update(ModelParams<double>&, ModelParams<double>&, double);

}  // namespace slim

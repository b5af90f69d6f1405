#pragma once

#include <array>
#include <string>
#include <vector>

#include "slim/encoder.hpp"
#include "slim/masking.hpp"

namespace slim {

using MatD = Mat<double>;

enum class Reduction { Mean, Sum };
enum class KoleoTarget { Cls, PatchMean };

std::string to_string(Reduction r);
std::string to_string(KoleoTarget t);

struct DistillConfig {
  double student_temp = 0.1;
  double teacher_temp = 0.04;
  int sinkhorn_iters = 3;
  double koleo_weight = 0.1;
  double lambda_glcl = 1.0;
  Reduction mfm_reduction = Reduction::Mean;
  Reduction glcl_reduction = Reduction::Sum;
  KoleoTarget koleo_target = KoleoTarget::Cls;
  // Run an extra unmasked student forward of each global view for the
  // contrastive term instead of reusing the masked one.
  bool glcl_global_unmasked = false;

  void validate() const;
};

// Row-wise softmax(logits / temp) with max subtraction.
MatD softmax_temp(const MatD& logits, double temp);
MatD log_softmax_temp(const MatD& logits, double temp);

// Log-space Sinkhorn-Knopp over the rows of exp(logits / temp): alternate
// prototype marginals 1/K and sample marginals 1/B, then renormalize rows.
// A single row has no batch marginal to balance and reduces to the softmax.
MatD sinkhorn_center(const MatD& logits, double temp, int iters);

// -sum_{masked i} sum_k p_t[i,k] log p_s[i,k], divided by the masked count
// for Reduction::Mean.
double mfm_loss(const MatD& teacher_probs, const MatD& student_logprobs, const TubeMask& mask,
                Reduction reduction);

// teacher_probs: 1 x K. One student log-distribution (1 x K) per view.
double glcl_loss(const MatD& teacher_probs, const std::vector<MatD>& student_logprobs,
                 Reduction reduction);

// -1/B sum_i log(max(d_i, eps)), d_i the distance from normalized row i to its
// nearest other normalized row. `grad` receives dL/dfeatures when non-null.
double koleo_loss(const MatD& features, MatD* grad = nullptr, double eps = 1e-8);

// Gradient of -sum_rows sum_k p_t log softmax(l / temp) with respect to l.
MatD cross_entropy_logit_grad(const MatD& teacher_probs, const MatD& student_logits, double temp);

struct LossParts {
  double mfm = 0.0;
  double glcl = 0.0;
  double koleo = 0.0;
  double total = 0.0;
};

// Per-anchor MFM and GLCL values are averaged over the two anchors.
LossParts total_loss(const std::array<double, 2>& mfm, const std::array<double, 2>& glcl,
                     double koleo, const DistillConfig& cfg);

// phi = tau * phi + (1 - tau) * theta for every tensor.
template <typename S>
void ema_update(ModelParams<S>& teacher, ModelParams<S>& student, double tau);

}  // namespace slim

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slim/config.hpp"
#include "slim/encoder.hpp"
#include "slim/objective.hpp"
#include "slim/skeldata.hpp"

namespace slim {

// The sequence is resampled to cfg.frames over its full extent and encoded
// without masking or augmentation.
Eigen::VectorXd extract_representation(const EncoderParams<float>& encoder,
                                       const SkeletonSequence& seq, const ModelConfig& cfg,
                                       RepresentationSource source = RepresentationSource::Cls);

// One row per sequence.
MatD extract_representations(const EncoderParams<float>& encoder,
                             const std::vector<const SkeletonSequence*>& seqs,
                             const ModelConfig& cfg, RepresentationSource source, int workers);

struct ProbeResult {
  double accuracy = 0.0;        // test top-1
  double train_accuracy = 0.0;
  int n_train = 0;
  int n_test = 0;
};

// Multinomial logistic regression on frozen features, trained with AdamW
// and a cosine learning-rate decay.
ProbeResult linear_probe(const MatD& train_x, const std::vector<int>& train_y, const MatD& test_x,
                         const std::vector<int>& test_y, const ProbeConfig& cfg);

// Cosine-similarity k-NN top-1 accuracy. Similarity ties go to the lower
// gallery index; vote ties to the label whose best neighbour ranks first.
double knn_retrieve(const MatD& gallery_x, const std::vector<int>& gallery_y, const MatD& query_x,
                    const std::vector<int>& query_y, int k = 1);

// FLOPs = 2 * MACs. Counted: patch projection, QKV, attention scores,
// attention-weighted values, output projection, MLP. Everything else
// (LayerNorm, softmax, RoPE, heads, biases) is excluded.
struct FlopsBreakdown {
  std::int64_t patch_projection = 0;
  std::int64_t qkv = 0;
  std::int64_t scores = 0;
  std::int64_t attn_values = 0;
  std::int64_t out_proj = 0;
  std::int64_t mlp = 0;
  std::int64_t total = 0;
};

// n_tokens counts every token entering the blocks; n_patches (default
// n_tokens - 1) counts the patch-projected ones.
FlopsBreakdown count_flops(const ModelConfig& cfg, std::int64_t n_tokens, std::int64_t n_patches = -1);

struct FlopsScenario {
  std::string name;
  std::int64_t tokens = 0;
  std::string baseline;       // scenario the ratio is taken against ("" = itself)
  double paper_ratio = 0.0;   // published figure for the same comparison, 0 if none
};

struct FlopsRow {
  std::string scenario;
  std::int64_t tokens = 0;
  double gflops = 0.0;
  std::string baseline;
  double ratio = 1.0;
  double paper_ratio = 0.0;
};

// MAE-style pretraining (75 visible patches + cls), MAE inference (750 + cls),
// and the symmetric 200 + cls setting used for both training and inference.
std::vector<FlopsScenario> default_flops_scenarios();
std::vector<FlopsRow> flops_report(const ModelConfig& cfg, const std::vector<FlopsScenario>& scenarios);

}  // namespace slim

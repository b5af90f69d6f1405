#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "slim/masking.hpp"
#include "slim/rng.hpp"
#include "slim/skeldata.hpp"

namespace slim {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ModelConfig {
  int layers = 8;
  int dim = 256;
  int heads = 8;
  int mlp_ratio = 4;
  int patch_t = 8;
  int patch_j = 1;
  int frames = 64;
  int joints = 25;
  int registers = 4;
  int prototypes = 65536;
  int head_hidden = 2048;
  int head_bottleneck = 256;
  bool patch_bias = true;
  bool share_heads = false;
  bool use_rope = true;
  double rope_base = 10000.0;
  double ln_eps = 1e-6;
  double init_std = 0.02;

  void validate() const;
  int head_dim() const { return dim / heads; }
  int patch_dim() const { return patch_t * patch_j * 3; }
  int joint_tokens() const { return joints / patch_j; }
  int patch_tokens(int view_frames) const { return view_frames / patch_t * joint_tokens(); }
  // cls + registers + patches.
  int sequence_length(int view_frames) const { return 1 + registers + patch_tokens(view_frames); }
  int prefix() const { return 1 + registers; }

  static ModelConfig tiny();
  static ModelConfig paper();
};

template <typename S>
struct LayerParams {
  Mat<S> ln1_g, ln1_b;
  Mat<S> qkv_w, qkv_b;  // D x 3D, columns [q | k | v], head h at h*dh
  Mat<S> out_w, out_b;
  Mat<S> ln2_g, ln2_b;
  Mat<S> fc1_w, fc1_b;
  Mat<S> fc2_w, fc2_b;
};

template <typename S>
struct EncoderParams {
  Mat<S> proj_w, proj_b;  // Dp x D, 1 x D
  Mat<S> skel;            // J' x D
  Mat<S> cls;             // 1 x D
  Mat<S> registers;       // N_reg x D
  Mat<S> mask_token;      // 1 x D
  std::vector<LayerParams<S>> layers;
  Mat<S> lnf_g, lnf_b;
};

// D -> H -> H -> bottleneck with GELU between, then unit-norm prototypes.
template <typename S>
struct HeadParams {
  Mat<S> w1, b1, w2, b2, w3, b3;
  Mat<S> prototypes;  // K x bottleneck, unit rows
};

template <typename S>
struct ModelParams {
  EncoderParams<S> encoder;
  HeadParams<S> cls_head;
  HeadParams<S> patch_head;  // empty when heads are shared
};

template <typename S>
struct ParamRef {
  std::string name;
  Mat<S>* value;
  bool decay;  // subject to weight decay
};

// Stable, name-addressed listing of every parameter tensor.
template <typename S>
std::vector<ParamRef<S>> param_refs(ModelParams<S>& params);

ModelParams<float> init_model(const ModelConfig& cfg, Rng& rng);
// Zero-filled parameters with the shapes implied by cfg.
ModelParams<float> allocate_model(const ModelConfig& cfg);

template <typename S>
ModelParams<S> zeros_like(const ModelParams<S>& params);

template <typename To, typename From>
ModelParams<To> cast_params(const ModelParams<From>& params);

template <typename S>
void renormalize_prototypes(ModelParams<S>& params);

template <typename S>
const HeadParams<S>& patch_head_of(const ModelParams<S>& params, const ModelConfig& cfg) {
  return cfg.share_heads ? params.cls_head : params.patch_head;
}

// View (T x J x 3) to patch inputs N x Dp, rows (temporal patch, joint patch)
// row-major, each patch flattened (frame, joint, channel).
template <typename S>
Mat<S> patchify(const SkeletonSequence& seq, const ModelConfig& cfg);

// Rotates consecutive pairs of every head slice of x (tokens x heads*dh) by
// position * base^(-2i/dh). Negative positions are left unrotated.
template <typename S>
void rope_apply(Mat<S>& x, int heads, const std::vector<int>& positions, double base,
                bool inverse = false);

template <typename S>
struct LnCache {
  Mat<S> xhat;
  Eigen::Matrix<S, Eigen::Dynamic, 1> rstd;
};

template <typename S>
struct LayerTape {
  Mat<S> z_in;
  LnCache<S> ln1;
  Mat<S> a;
  Mat<S> q, k, v;  // q, k after RoPE
  std::vector<Mat<S>> probs;
  Mat<S> o;
  Mat<S> z_mid;
  LnCache<S> ln2;
  Mat<S> b;
  Mat<S> h, g;
};

template <typename S>
struct EncoderTape {
  Mat<S> x;
  std::vector<std::uint8_t> masked;  // per patch token
  std::vector<int> positions;        // per sequence token
  std::vector<LayerTape<S>> layers;
  LnCache<S> lnf;
};

template <typename S>
struct Encoded {
  Mat<S> tokens;  // full output after the final LayerNorm: [cls, registers, patches]
  int prefix = 1;

  auto cls() const { return tokens.topRows(1); }
  auto registers() const { return tokens.middleRows(1, prefix - 1); }
  auto patches() const { return tokens.bottomRows(tokens.rows() - prefix); }
};

// Patch embedding, optional masking, cls/register prepend, L pre-norm
// blocks and the final LayerNorm.
template <typename S>
Encoded<S> encode(const Mat<S>& patch_inputs, const TubeMask* mask, const EncoderParams<S>& params,
                  const ModelConfig& cfg, EncoderTape<S>* tape = nullptr);

// Accumulates parameter gradients for d(output tokens).
template <typename S>
void encode_backward(const EncoderTape<S>& tape, const Mat<S>& d_tokens,
                     const EncoderParams<S>& params, const ModelConfig& cfg,
                     EncoderParams<S>& grads);

template <typename S>
struct HeadTape {
  Mat<S> x, h1, g1, h2, g2, h3;
  Mat<S> unit;
  Eigen::Matrix<S, Eigen::Dynamic, 1> norm;
};

// Logits (n x K). tape->h3 holds the pre-normalization bottleneck features.
template <typename S>
Mat<S> head_forward(const Mat<S>& features, const HeadParams<S>& head, HeadTape<S>* tape = nullptr);

// Returns d(features). d_bottleneck (optional) is an extra gradient on the
// pre-normalization bottleneck features.
template <typename S>
Mat<S> head_backward(const HeadTape<S>& tape, const Mat<S>& d_logits, const Mat<S>* d_bottleneck,
                     const HeadParams<S>& head, HeadParams<S>& grads);

template <typename S>
Mat<S> gelu(const Mat<S>& x);

}  // namespace slim

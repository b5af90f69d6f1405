#include "slim/encoder.hpp"

#include <cmath>
#include <numbers>

#include "slim/error.hpp"

namespace slim {

void ModelConfig::validate() const {
  if (layers < 0) throw ValidationError("layers must be >= 0");
  if (dim < 1 || heads < 1 || dim % heads != 0)
    throw ValidationError("dim must be a positive multiple of heads");
  if (head_dim() % 2 != 0) throw ValidationError("head dimension must be even for RoPE");
  if (mlp_ratio < 1) throw ValidationError("mlp_ratio must be >= 1");
  if (patch_t < 1 || patch_j < 1) throw ValidationError("patch sizes must be >= 1");
  if (frames < patch_t || frames % patch_t != 0)
    throw ValidationError("frames must be divisible by patch_t");
  if (joints < 1 || joints % patch_j != 0)
    throw ValidationError("joints must be divisible by patch_j");
  if (registers < 0) throw ValidationError("registers must be >= 0");
  if (prototypes < 1 || head_hidden < 1 || head_bottleneck < 1)
    throw ValidationError("head sizes must be >= 1");
  if (!(rope_base > 1.0)) throw ValidationError("rope_base must exceed 1");
  if (!(ln_eps > 0.0)) throw ValidationError("ln_eps must be positive");
}

ModelConfig ModelConfig::tiny() {
  ModelConfig c;
  c.layers = 2;
  c.dim = 32;
  c.heads = 4;
  c.prototypes = 64;
  c.head_hidden = 128;
  c.head_bottleneck = 64;
  return c;
}

ModelConfig ModelConfig::paper() { return ModelConfig{}; }

namespace {

template <typename S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

void truncated_normal(Mat<float>& m, int rows, int cols, double std, Rng& rng) {
  m.resize(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) {
      double v;
      do v = rng.normal();
      while (std::abs(v) > 2.0);
      m(i, j) = static_cast<float>(v * std);
    }
}

Mat<float> zeros(int rows, int cols) { return Mat<float>::Zero(rows, cols); }
Mat<float> ones(int rows, int cols) { return Mat<float>::Ones(rows, cols); }

HeadParams<float> init_head(const ModelConfig& cfg, Rng& rng) {
  HeadParams<float> h;
  truncated_normal(h.w1, cfg.dim, cfg.head_hidden, cfg.init_std, rng);
  h.b1 = zeros(1, cfg.head_hidden);
  truncated_normal(h.w2, cfg.head_hidden, cfg.head_hidden, cfg.init_std, rng);
  h.b2 = zeros(1, cfg.head_hidden);
  truncated_normal(h.w3, cfg.head_hidden, cfg.head_bottleneck, cfg.init_std, rng);
  h.b3 = zeros(1, cfg.head_bottleneck);
  truncated_normal(h.prototypes, cfg.prototypes, cfg.head_bottleneck, cfg.init_std, rng);
  return h;
}

template <typename S>
void prototypes_unit(Mat<S>& p) {
  for (int i = 0; i < p.rows(); ++i) {
    const S n = p.row(i).norm();
    if (n > S(0)) p.row(i) /= n;
  }
}

template <typename S>
Mat<S> layer_norm(const Mat<S>& x, const Mat<S>& g, const Mat<S>& b, double eps, LnCache<S>* cache) {
  const int d = static_cast<int>(x.cols());
  Vec<S> mean = x.rowwise().mean();
  Mat<S> xc = x.colwise() - mean;
  Vec<S> var = xc.array().square().rowwise().sum() / S(d);
  Vec<S> rstd = (var.array() + S(eps)).rsqrt();
  Mat<S> xhat = xc.array().colwise() * rstd.array();
  Mat<S> y = (xhat.array().rowwise() * g.row(0).array()).rowwise() + b.row(0).array();
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->rstd = std::move(rstd);
  }
  return y;
}

template <typename S>
Mat<S> layer_norm_backward(const LnCache<S>& cache, const Mat<S>& dy, const Mat<S>& g, Mat<S>& dg,
                           Mat<S>& db) {
  const S d = static_cast<S>(dy.cols());
  dg += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
  db += dy.colwise().sum();
  Mat<S> dxhat = dy.array().rowwise() * g.row(0).array();
  Vec<S> m1 = dxhat.rowwise().sum() / d;
  Vec<S> m2 = (dxhat.array() * cache.xhat.array()).rowwise().sum() / d;
  Mat<S> dx = dxhat.colwise() - m1;
  dx.array() -= cache.xhat.array().colwise() * m2.array();
  dx.array().colwise() *= cache.rstd.array();
  return dx;
}

template <typename S>
Mat<S> gelu_grad(const Mat<S>& x) {
  const S inv_sqrt2 = S(1.0 / std::numbers::sqrt2);
  const S inv_sqrt2pi = S(1.0 / std::sqrt(2.0 * std::numbers::pi));
  return x.unaryExpr([=](S v) {
    return S(0.5) * (S(1) + std::erf(v * inv_sqrt2)) + v * inv_sqrt2pi * std::exp(S(-0.5) * v * v);
  });
}

template <typename S>
void softmax_rows(Mat<S>& m) {
  for (int i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    r.array() = (r.array() - r.maxCoeff()).exp();
    r /= r.sum();
  }
}

template <typename S>
void check_finite(const Mat<S>& m, int layer) {
  if (!m.allFinite())
    throw NumericError("non-finite activation in encoder layer " + std::to_string(layer));
}

template <typename S>
void add_into(Mat<S>& dst, const Mat<S>& src) {
  if (dst.size() == 0) dst = Mat<S>::Zero(src.rows(), src.cols());
  dst += src;
}

}  // namespace

template <typename S>
Mat<S> gelu(const Mat<S>& x) {
  const S inv_sqrt2 = S(1.0 / std::numbers::sqrt2);
  return x.unaryExpr([=](S v) { return S(0.5) * v * (S(1) + std::erf(v * inv_sqrt2)); });
}

ModelParams<float> init_model(const ModelConfig& cfg, Rng& rng) {
  cfg.validate();
  const int d = cfg.dim, hidden = cfg.dim * cfg.mlp_ratio;
  ModelParams<float> p;
  auto& e = p.encoder;
  truncated_normal(e.proj_w, cfg.patch_dim(), d, cfg.init_std, rng);
  e.proj_b = zeros(1, d);
  truncated_normal(e.skel, cfg.joint_tokens(), d, cfg.init_std, rng);
  truncated_normal(e.cls, 1, d, cfg.init_std, rng);
  truncated_normal(e.registers, cfg.registers, d, cfg.init_std, rng);
  truncated_normal(e.mask_token, 1, d, cfg.init_std, rng);
  e.layers.resize(cfg.layers);
  for (auto& l : e.layers) {
    l.ln1_g = ones(1, d);
    l.ln1_b = zeros(1, d);
    truncated_normal(l.qkv_w, d, 3 * d, cfg.init_std, rng);
    l.qkv_b = zeros(1, 3 * d);
    truncated_normal(l.out_w, d, d, cfg.init_std, rng);
    l.out_b = zeros(1, d);
    l.ln2_g = ones(1, d);
    l.ln2_b = zeros(1, d);
    truncated_normal(l.fc1_w, d, hidden, cfg.init_std, rng);
    l.fc1_b = zeros(1, hidden);
    truncated_normal(l.fc2_w, hidden, d, cfg.init_std, rng);
    l.fc2_b = zeros(1, d);
  }
  e.lnf_g = ones(1, d);
  e.lnf_b = zeros(1, d);
  p.cls_head = init_head(cfg, rng);
  if (!cfg.share_heads) p.patch_head = init_head(cfg, rng);
  renormalize_prototypes(p);
  return p;
}

ModelParams<float> allocate_model(const ModelConfig& cfg) {
  cfg.validate();
  const int d = cfg.dim, hidden = cfg.dim * cfg.mlp_ratio;
  ModelParams<float> p;
  auto& e = p.encoder;
  e.proj_w = zeros(cfg.patch_dim(), d);
  e.proj_b = zeros(1, d);
  e.skel = zeros(cfg.joint_tokens(), d);
  e.cls = zeros(1, d);
  e.registers = zeros(cfg.registers, d);
  e.mask_token = zeros(1, d);
  e.layers.resize(cfg.layers);
  for (auto& l : e.layers) {
    l.ln1_g = zeros(1, d);
    l.ln1_b = zeros(1, d);
    l.qkv_w = zeros(d, 3 * d);
    l.qkv_b = zeros(1, 3 * d);
    l.out_w = zeros(d, d);
    l.out_b = zeros(1, d);
    l.ln2_g = zeros(1, d);
    l.ln2_b = zeros(1, d);
    l.fc1_w = zeros(d, hidden);
    l.fc1_b = zeros(1, hidden);
    l.fc2_w = zeros(hidden, d);
    l.fc2_b = zeros(1, d);
  }
  e.lnf_g = zeros(1, d);
  e.lnf_b = zeros(1, d);
  auto head = [&](HeadParams<float>& h) {
    h.w1 = zeros(d, cfg.head_hidden);
    h.b1 = zeros(1, cfg.head_hidden);
    h.w2 = zeros(cfg.head_hidden, cfg.head_hidden);
    h.b2 = zeros(1, cfg.head_hidden);
    h.w3 = zeros(cfg.head_hidden, cfg.head_bottleneck);
    h.b3 = zeros(1, cfg.head_bottleneck);
    h.prototypes = zeros(cfg.prototypes, cfg.head_bottleneck);
  };
  head(p.cls_head);
  if (!cfg.share_heads) head(p.patch_head);
  return p;
}

template <typename S>
std::vector<ParamRef<S>> param_refs(ModelParams<S>& p) {
  std::vector<ParamRef<S>> out;
  auto& e = p.encoder;
  out.push_back({"encoder.proj_w", &e.proj_w, true});
  out.push_back({"encoder.proj_b", &e.proj_b, false});
  out.push_back({"encoder.skel", &e.skel, true});
  out.push_back({"encoder.cls", &e.cls, false});
  out.push_back({"encoder.registers", &e.registers, false});
  out.push_back({"encoder.mask_token", &e.mask_token, false});
  for (std::size_t i = 0; i < e.layers.size(); ++i) {
    auto& l = e.layers[i];
    const std::string pre = "encoder.layer" + std::to_string(i) + ".";
    out.push_back({pre + "ln1_g", &l.ln1_g, false});
    out.push_back({pre + "ln1_b", &l.ln1_b, false});
    out.push_back({pre + "qkv_w", &l.qkv_w, true});
    out.push_back({pre + "qkv_b", &l.qkv_b, false});
    out.push_back({pre + "out_w", &l.out_w, true});
    out.push_back({pre + "out_b", &l.out_b, false});
    out.push_back({pre + "ln2_g", &l.ln2_g, false});
    out.push_back({pre + "ln2_b", &l.ln2_b, false});
    out.push_back({pre + "fc1_w", &l.fc1_w, true});
    out.push_back({pre + "fc1_b", &l.fc1_b, false});
    out.push_back({pre + "fc2_w", &l.fc2_w, true});
    out.push_back({pre + "fc2_b", &l.fc2_b, false});
  }
  out.push_back({"encoder.lnf_g", &e.lnf_g, false});
  out.push_back({"encoder.lnf_b", &e.lnf_b, false});
  auto head = [&](const std::string& pre, HeadParams<S>& h) {
    out.push_back({pre + "w1", &h.w1, true});
    out.push_back({pre + "b1", &h.b1, false});
    out.push_back({pre + "w2", &h.w2, true});
    out.push_back({pre + "b2", &h.b2, false});
    out.push_back({pre + "w3", &h.w3, true});
    out.push_back({pre + "b3", &h.b3, false});
    out.push_back({pre + "prototypes", &h.prototypes, false});
  };
  head("cls_head.", p.cls_head);
  if (p.patch_head.w1.size() > 0) head("patch_head.", p.patch_head);
  return out;
}

template <typename S>
ModelParams<S> zeros_like(const ModelParams<S>& params) {
  ModelParams<S> out = params;
  for (auto& r : param_refs(out)) r.value->setZero();
  return out;
}

template <typename To, typename From>
ModelParams<To> cast_params(const ModelParams<From>& params) {
  auto& src = const_cast<ModelParams<From>&>(params);
  ModelParams<To> out;
  out.encoder.layers.resize(params.encoder.layers.size());
  if (params.patch_head.w1.size() > 0) out.patch_head.w1.resize(1, 1);
  auto from = param_refs(src);
  auto to = param_refs(out);
  for (std::size_t i = 0; i < from.size(); ++i) *to[i].value = from[i].value->template cast<To>();
  return out;
}

template <typename S>
void renormalize_prototypes(ModelParams<S>& params) {
  prototypes_unit(params.cls_head.prototypes);
  if (params.patch_head.prototypes.size() > 0) prototypes_unit(params.patch_head.prototypes);
}

template <typename S>
Mat<S> patchify(const SkeletonSequence& seq, const ModelConfig& cfg) {
  if (seq.frames % cfg.patch_t != 0)
    throw ValidationError("view length " + std::to_string(seq.frames) +
                          " is not divisible by patch_t " + std::to_string(cfg.patch_t));
  if (seq.joints != cfg.joints)
    throw ValidationError("view has " + std::to_string(seq.joints) + " joints, model expects " +
                          std::to_string(cfg.joints));
  const int tp = seq.frames / cfg.patch_t, jp = cfg.joint_tokens();
  Mat<S> out(tp * jp, cfg.patch_dim());
  for (int a = 0; a < tp; ++a)
    for (int b = 0; b < jp; ++b) {
      int col = 0;
      for (int dt = 0; dt < cfg.patch_t; ++dt)
        for (int dj = 0; dj < cfg.patch_j; ++dj)
          for (int c = 0; c < 3; ++c)
            out(a * jp + b, col++) =
                static_cast<S>(seq.at(a * cfg.patch_t + dt, b * cfg.patch_j + dj, c));
    }
  return out;
}

template <typename S>
void rope_apply(Mat<S>& x, int heads, const std::vector<int>& positions, double base, bool inverse) {
  const int dh = static_cast<int>(x.cols()) / heads;
  if (dh % 2 != 0 || dh * heads != x.cols())
    throw ValidationError("RoPE needs an even per-head dimension");
  if (static_cast<Eigen::Index>(positions.size()) != x.rows())
    throw ValidationError("RoPE positions do not match token count");
  const int pairs = dh / 2;
  std::vector<double> omega(pairs);
  for (int i = 0; i < pairs; ++i) omega[i] = std::pow(base, -2.0 * i / dh);
  for (int t = 0; t < x.rows(); ++t) {
    if (positions[t] <= 0) continue;
    for (int i = 0; i < pairs; ++i) {
      const double ang = positions[t] * omega[i] * (inverse ? -1.0 : 1.0);
      const S c = static_cast<S>(std::cos(ang)), s = static_cast<S>(std::sin(ang));
      for (int h = 0; h < heads; ++h) {
        S& x0 = x(t, h * dh + 2 * i);
        S& x1 = x(t, h * dh + 2 * i + 1);
        const S a = x0, b = x1;
        x0 = c * a - s * b;
        x1 = s * a + c * b;
      }
    }
  }
}

template <typename S>
Encoded<S> encode(const Mat<S>& patch_inputs, const TubeMask* mask, const EncoderParams<S>& p,
                  const ModelConfig& cfg, EncoderTape<S>* tape) {
  const int n_patch = static_cast<int>(patch_inputs.rows());
  const int jp = cfg.joint_tokens();
  if (patch_inputs.cols() != cfg.patch_dim() || n_patch % jp != 0 || n_patch == 0)
    throw ValidationError("patch inputs do not match the model configuration");
  if (mask && mask->grid.size() != n_patch)
    throw ValidationError("mask grid does not match the token count");
  const int d = cfg.dim, heads = cfg.heads, dh = cfg.head_dim();
  const int pre = cfg.prefix(), n = pre + n_patch;

  Mat<S> tokens = patch_inputs * p.proj_w;
  if (cfg.patch_bias) tokens.rowwise() += p.proj_b.row(0);
  for (int i = 0; i < n_patch; ++i) tokens.row(i) += p.skel.row(i % jp);
  if (mask) apply_mask(tokens, *mask, p.mask_token);

  Mat<S> z(n, d);
  z.row(0) = p.cls.row(0);
  if (cfg.registers > 0) z.middleRows(1, cfg.registers) = p.registers;
  z.bottomRows(n_patch) = tokens;
  check_finite(z, 0);

  std::vector<int> positions(n, -1);
  for (int i = 0; i < n_patch; ++i) positions[pre + i] = cfg.use_rope ? i / jp : -1;

  if (tape) {
    tape->x = patch_inputs;
    tape->masked.assign(n_patch, 0);
    if (mask)
      for (int i = 0; i < n_patch; ++i) tape->masked[i] = mask->cells[i];
    tape->positions = positions;
    tape->layers.assign(cfg.layers, {});
  }

  const S scale = S(1.0 / std::sqrt(static_cast<double>(dh)));
  for (int li = 0; li < cfg.layers; ++li) {
    const auto& l = p.layers[li];
    LayerTape<S> local;
    LayerTape<S>& lt = tape ? tape->layers[li] : local;
    lt.z_in = z;
    lt.a = layer_norm(z, l.ln1_g, l.ln1_b, cfg.ln_eps, &lt.ln1);
    Mat<S> qkv = lt.a * l.qkv_w;
    qkv.rowwise() += l.qkv_b.row(0);
    lt.q = qkv.leftCols(d);
    lt.k = qkv.middleCols(d, d);
    lt.v = qkv.rightCols(d);
    rope_apply(lt.q, heads, positions, cfg.rope_base);
    rope_apply(lt.k, heads, positions, cfg.rope_base);
    lt.o.resize(n, d);
    lt.probs.resize(heads);
    for (int h = 0; h < heads; ++h) {
      Mat<S> s = (lt.q.middleCols(h * dh, dh) * lt.k.middleCols(h * dh, dh).transpose()) * scale;
      softmax_rows(s);
      lt.o.middleCols(h * dh, dh) = s * lt.v.middleCols(h * dh, dh);
      lt.probs[h] = std::move(s);
    }
    Mat<S> y = lt.o * l.out_w;
    y.rowwise() += l.out_b.row(0);
    lt.z_mid = z + y;
    lt.b = layer_norm(lt.z_mid, l.ln2_g, l.ln2_b, cfg.ln_eps, &lt.ln2);
    lt.h = lt.b * l.fc1_w;
    lt.h.rowwise() += l.fc1_b.row(0);
    lt.g = gelu(lt.h);
    Mat<S> m = lt.g * l.fc2_w;
    m.rowwise() += l.fc2_b.row(0);
    z = lt.z_mid + m;
    check_finite(z, li + 1);
  }

  Encoded<S> out;
  out.prefix = pre;
  out.tokens = layer_norm(z, p.lnf_g, p.lnf_b, cfg.ln_eps, tape ? &tape->lnf : nullptr);
  check_finite(out.tokens, cfg.layers);
  return out;
}

template <typename S>
void encode_backward(const EncoderTape<S>& tape, const Mat<S>& d_tokens, const EncoderParams<S>& p,
                     const ModelConfig& cfg, EncoderParams<S>& g) {
  const int d = cfg.dim, heads = cfg.heads, dh = cfg.head_dim();
  const int pre = cfg.prefix();
  const int n_patch = static_cast<int>(tape.x.rows());
  const int n = pre + n_patch;
  const int jp = cfg.joint_tokens();
  const S scale = S(1.0 / std::sqrt(static_cast<double>(dh)));

  Mat<S> dz = layer_norm_backward(tape.lnf, d_tokens, p.lnf_g, g.lnf_g, g.lnf_b);

  for (int li = cfg.layers - 1; li >= 0; --li) {
    const auto& l = p.layers[li];
    auto& gl = g.layers[li];
    const auto& lt = tape.layers[li];

    // MLP branch.
    gl.fc2_w.noalias() += lt.g.transpose() * dz;
    gl.fc2_b += dz.colwise().sum();
    Mat<S> dgact = dz * l.fc2_w.transpose();
    Mat<S> dh_ = dgact.cwiseProduct(gelu_grad(lt.h));
    gl.fc1_w.noalias() += lt.b.transpose() * dh_;
    gl.fc1_b += dh_.colwise().sum();
    Mat<S> db_ = dh_ * l.fc1_w.transpose();
    Mat<S> dz_mid = dz + layer_norm_backward(lt.ln2, db_, l.ln2_g, gl.ln2_g, gl.ln2_b);

    // Attention branch.
    gl.out_w.noalias() += lt.o.transpose() * dz_mid;
    gl.out_b += dz_mid.colwise().sum();
    Mat<S> d_o = dz_mid * l.out_w.transpose();
    Mat<S> dq(n, d), dk(n, d), dv(n, d);
    for (int h = 0; h < heads; ++h) {
      const Mat<S>& pr = lt.probs[h];
      Mat<S> doh = d_o.middleCols(h * dh, dh);
      dv.middleCols(h * dh, dh).noalias() = pr.transpose() * doh;
      Mat<S> dp = doh * lt.v.middleCols(h * dh, dh).transpose();
      Vec<S> rs = (dp.array() * pr.array()).rowwise().sum();
      Mat<S> ds = (pr.array() * (dp.array().colwise() - rs.array())).matrix() * scale;
      dq.middleCols(h * dh, dh).noalias() = ds * lt.k.middleCols(h * dh, dh);
      dk.middleCols(h * dh, dh).noalias() = ds.transpose() * lt.q.middleCols(h * dh, dh);
    }
    rope_apply(dq, heads, tape.positions, cfg.rope_base, true);
    rope_apply(dk, heads, tape.positions, cfg.rope_base, true);
    Mat<S> dqkv(n, 3 * d);
    dqkv.leftCols(d) = dq;
    dqkv.middleCols(d, d) = dk;
    dqkv.rightCols(d) = dv;
    gl.qkv_w.noalias() += lt.a.transpose() * dqkv;
    gl.qkv_b += dqkv.colwise().sum();
    Mat<S> da = dqkv * l.qkv_w.transpose();
    dz = dz_mid + layer_norm_backward(lt.ln1, da, l.ln1_g, gl.ln1_g, gl.ln1_b);
  }

  g.cls += dz.topRows(1);
  if (cfg.registers > 0) g.registers += dz.middleRows(1, cfg.registers);
  Mat<S> dtok = dz.bottomRows(n_patch);
  for (int i = 0; i < n_patch; ++i) {
    if (tape.masked[i]) {
      g.mask_token += dtok.row(i);
      dtok.row(i).setZero();
    } else {
      g.skel.row(i % jp) += dtok.row(i);
    }
  }
  g.proj_w.noalias() += tape.x.transpose() * dtok;
  if (cfg.patch_bias) g.proj_b += dtok.colwise().sum();
}

template <typename S>
Mat<S> head_forward(const Mat<S>& x, const HeadParams<S>& hp, HeadTape<S>* tape) {
  HeadTape<S> local;
  HeadTape<S>& t = tape ? *tape : local;
  t.x = x;
  t.h1 = x * hp.w1;
  t.h1.rowwise() += hp.b1.row(0);
  t.g1 = gelu(t.h1);
  t.h2 = t.g1 * hp.w2;
  t.h2.rowwise() += hp.b2.row(0);
  t.g2 = gelu(t.h2);
  t.h3 = t.g2 * hp.w3;
  t.h3.rowwise() += hp.b3.row(0);
  t.norm = t.h3.rowwise().norm();
  t.unit = t.h3;
  const S eps = S(1e-12);
  for (int i = 0; i < t.unit.rows(); ++i) t.unit.row(i) /= std::max(t.norm(i), eps);
  return t.unit * hp.prototypes.transpose();
}

template <typename S>
Mat<S> head_backward(const HeadTape<S>& t, const Mat<S>& d_logits, const Mat<S>* d_bottleneck,
                     const HeadParams<S>& hp, HeadParams<S>& g) {
  g.prototypes.noalias() += d_logits.transpose() * t.unit;
  Mat<S> du = d_logits * hp.prototypes;
  const S eps = S(1e-12);
  Mat<S> dh3(t.h3.rows(), t.h3.cols());
  for (int i = 0; i < t.h3.rows(); ++i) {
    if (t.norm(i) > eps) {
      const S proj = du.row(i).dot(t.unit.row(i));
      dh3.row(i) = (du.row(i) - proj * t.unit.row(i)) / t.norm(i);
    } else {
      dh3.row(i) = du.row(i) / eps;
    }
  }
  if (d_bottleneck) dh3 += *d_bottleneck;
  g.w3.noalias() += t.g2.transpose() * dh3;
  g.b3 += dh3.colwise().sum();
  Mat<S> dh2 = (dh3 * hp.w3.transpose()).cwiseProduct(gelu_grad(t.h2));
  g.w2.noalias() += t.g1.transpose() * dh2;
  g.b2 += dh2.colwise().sum();
  Mat<S> dh1 = (dh2 * hp.w2.transpose()).cwiseProduct(gelu_grad(t.h1));
  g.w1.noalias() += t.x.transpose() * dh1;
  g.b1 += dh1.colwise().sum();
  return dh1 * hp.w1.transpose();
}

#define SLIM_INSTANTIATE(S)                                                                      \
  template std::vector<ParamRef<S>> param_refs(ModelParams<S>&);                                 \
  template ModelParams<S> zeros_like(const ModelParams<S>&);                                     \
  template void renormalize_prototypes(ModelParams<S>&);                                         \
  template Mat<S> patchify<S>(const SkeletonSequence&, const ModelConfig&);                      \
  template void rope_apply(Mat<S>&, int, const std::vector<int>&, double, bool);                 \
  template Encoded<S> encode(const Mat<S>&, const TubeMask*, const EncoderParams<S>&,            \
                             const ModelConfig&, EncoderTape<S>*);                               \
  template void encode_backward(const EncoderTape<S>&, const Mat<S>&, const EncoderParams<S>&,   \
                                const ModelConfig&, EncoderParams<S>&);                          \
  template Mat<S> head_forward(const Mat<S>&, const HeadParams<S>&, HeadTape<S>*);               \
  template Mat<S> head_backward(const HeadTape<S>&, const Mat<S>&, const Mat<S>*,                \
                                const HeadParams<S>&, HeadParams<S>&);                           \
  template Mat<S> gelu(const Mat<S>&);

SLIM_INSTANTIATE(float)
SLIM_INSTANTIATE(double)
#undef SLIM_INSTANTIATE

template ModelParams<double> cast_params<double, float>(const ModelParams<float>&);
template ModelParams<float> cast_params<float, double>(const ModelParams<double>&);
template ModelParams<float> cast_params<float, float>(const ModelParams<float>&);
template ModelParams<double> cast_params<double, double>(const ModelParams<double>&);

}  // namespace slim

#include "slim/train.hpp"

#include <cmath>
#include <json.hpp>
#include <numbers>
#include <numeric>
#include <ostream>

#include "slim/augment.hpp"
#include "slim/checkpoint.hpp"
#include "slim/error.hpp"
#include "slim/parallel.hpp"
#include "slim/views.hpp"

namespace slim {

double lr_schedule(double step, int steps_per_epoch, const TrainConfig& cfg) {
  const double total = static_cast<double>(cfg.epochs) * steps_per_epoch;
  const double warm = static_cast<double>(cfg.warmup_epochs) * steps_per_epoch;
  if (step < warm) return cfg.base_lr * step / warm;
  const double span = total - 1.0 - warm;
  const double progress = span > 0.0 ? std::clamp((step - warm) / span, 0.0, 1.0) : 1.0;
  return cfg.final_lr +
         (cfg.base_lr - cfg.final_lr) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

double tau_schedule(double step, std::int64_t total_steps, const TrainConfig& cfg) {
  const double span = static_cast<double>(total_steps - 1);
  const double p = span > 0.0 ? std::clamp(step / span, 0.0, 1.0) : 1.0;
  if (cfg.tau_ramp == TauRamp::Linear) return cfg.tau_start + (cfg.tau_end - cfg.tau_start) * p;
  return cfg.tau_end - (cfg.tau_end - cfg.tau_start) * (std::cos(std::numbers::pi * p) + 1.0) / 2.0;
}

namespace {

constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kStepStream = 2;
constexpr std::uint64_t kShuffleStream = 3;

}  // namespace

TrainState init_train_state(const SlimConfig& cfg) {
  cfg.validate();
  TrainState s;
  Rng init = Rng::derive(cfg.train.seed, {kInitStream});
  s.student = init_model(cfg.model, init);
  s.teacher = s.student;
  s.adam.m = zeros_like(s.student);
  s.adam.v = zeros_like(s.student);
  s.rng = Rng::derive(cfg.train.seed, {kStepStream});
  s.config_hash = model_config_hash(cfg.model);
  return s;
}

PreparedSample prepare_sample(const SkeletonSequence& seq, const SkeletonTopology& topo,
                              const SlimConfig& cfg, Rng& rng) {
  ViewSet vs = make_view_set(seq, rng, cfg.views);
  auto prepare = [&](const View& v, double mask_prob) {
    PreparedView pv;
    const View aug = apply_saa(v, topo, cfg.augment, rng);
    pv.inputs = patchify<double>(aug.sequence, cfg.model);
    pv.kind = v.kind;
    const TokenGrid grid{aug.sequence.frames / cfg.model.patch_t, cfg.model.joint_tokens()};
    pv.masked = rng.bernoulli(mask_prob);
    pv.mask = pv.masked ? generate_mask(grid, topo, cfg.mask, rng) : empty_mask(grid);
    return pv;
  };
  PreparedSample s;
  for (int a = 0; a < 2; ++a) s.globals[a] = prepare(vs.globals[a], cfg.mask.global_prob);
  for (int a = 0; a < 2; ++a)
    for (const auto& v : vs.locals[a]) s.locals[a].push_back(prepare(v, cfg.mask.local_prob));
  return s;
}

PreparedBatch prepare_batch(const std::vector<const SkeletonSequence*>& batch,
                            const SkeletonTopology& topo, const SlimConfig& cfg,
                            std::uint64_t step_seed, int workers) {
  PreparedBatch out(batch.size());
  parallel_for(batch.size(), workers, [&](std::size_t b) {
    Rng rng = Rng::derive(step_seed, {static_cast<std::uint64_t>(b)});
    out[b] = prepare_sample(*batch[b], topo, cfg, rng);
  });
  return out;
}

namespace {

template <typename S>
Mat<S> gather_rows(const Mat<S>& m, const std::vector<int>& rows, int offset) {
  Mat<S> out(rows.size(), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(i) = m.row(offset + rows[i]);
  return out;
}

template <typename S>
MatD to_double(const Mat<S>& m) {
  return m.template cast<double>();
}

}  // namespace

template <typename S>
Targets teacher_targets(const ModelParams<S>& teacher, const PreparedBatch& batch,
                        const SlimConfig& cfg, int workers) {
  const std::size_t nb = batch.size();
  const int k = cfg.model.prototypes;
  const auto& phead = patch_head_of(teacher, cfg.model);
  std::vector<std::array<MatD, 2>> cls_logits(nb), patch_logits(nb);
  parallel_for(nb, workers, [&](std::size_t b) {
    for (int a = 0; a < 2; ++a) {
      const PreparedView& v = batch[b].globals[a];
      const Mat<S> in = v.inputs.template cast<S>();
      const Encoded<S> enc = encode<S>(in, nullptr, teacher.encoder, cfg.model);
      cls_logits[b][a] = to_double<S>(head_forward<S>(enc.tokens.topRows(1), teacher.cls_head));
      const auto rows = v.mask.masked_indices();
      if (!rows.empty())
        patch_logits[b][a] = to_double<S>(head_forward<S>(gather_rows<S>(enc.tokens, rows, enc.prefix), phead));
    }
  });

  Targets t;
  t.cls.resize(nb);
  t.patch.resize(nb);
  if (nb == 0) return t;

  MatD all_cls(2 * nb, k);
  for (std::size_t b = 0; b < nb; ++b)
    for (int a = 0; a < 2; ++a) all_cls.row(2 * b + a) = cls_logits[b][a].row(0);
  const MatD cls_p = sinkhorn_center(all_cls, cfg.distill.teacher_temp, cfg.distill.sinkhorn_iters);
  for (std::size_t b = 0; b < nb; ++b)
    for (int a = 0; a < 2; ++a) t.cls[b][a] = cls_p.row(2 * b + a);

  Eigen::Index total_rows = 0;
  for (std::size_t b = 0; b < nb; ++b)
    for (int a = 0; a < 2; ++a) total_rows += patch_logits[b][a].rows();
  MatD all_patch(total_rows, k);
  Eigen::Index r = 0;
  for (std::size_t b = 0; b < nb; ++b)
    for (int a = 0; a < 2; ++a) {
      all_patch.middleRows(r, patch_logits[b][a].rows()) = patch_logits[b][a];
      r += patch_logits[b][a].rows();
    }
  MatD patch_p;
  if (total_rows > 0)
    patch_p = sinkhorn_center(all_patch, cfg.distill.teacher_temp, cfg.distill.sinkhorn_iters);
  r = 0;
  for (std::size_t b = 0; b < nb; ++b)
    for (int a = 0; a < 2; ++a) {
      const TubeMask& mask = batch[b].globals[a].mask;
      t.patch[b][a] = MatD::Zero(mask.grid.size(), k);
      for (int idx : mask.masked_indices()) t.patch[b][a].row(idx) = patch_p.row(r++);
    }
  return t;
}

namespace {

template <typename S>
struct ViewPass {
  EncoderTape<S> tape;
  Encoded<S> enc;
  HeadTape<S> cls_tape;
  Mat<S> cls_logits;
  std::vector<int> rows;  // masked cells run through the patch head
  HeadTape<S> patch_tape;
  Mat<S> patch_logits;

  // Gradients gathered before the backward pass.
  Mat<S> d_cls_logits;
  Mat<S> d_bottleneck;
  Mat<S> d_patch_logits;
  Mat<S> d_patch_tokens;  // extra gradient on every patch output row
};

template <typename S>
struct SamplePass {
  std::array<ViewPass<S>, 2> globals;
  std::array<std::vector<ViewPass<S>>, 2> locals;
  std::array<ViewPass<S>, 2> clean;  // unmasked globals, optional
  bool has_clean = false;

  ViewPass<S>& contrast_global(int a) { return has_clean ? clean[a] : globals[a]; }
};

template <typename S>
void forward_view(const PreparedView& v, bool use_mask, bool patch_head, const ModelParams<S>& p,
                  const ModelConfig& cfg, ViewPass<S>& out) {
  const Mat<S> in = v.inputs.template cast<S>();
  out.enc = encode<S>(in, use_mask && v.masked ? &v.mask : nullptr, p.encoder, cfg, &out.tape);
  out.cls_logits = head_forward<S>(out.enc.tokens.topRows(1), p.cls_head, &out.cls_tape);
  if (patch_head && use_mask && v.masked) {
    out.rows = v.mask.masked_indices();
    if (!out.rows.empty())
      out.patch_logits = head_forward<S>(gather_rows<S>(out.enc.tokens, out.rows, out.enc.prefix),
                                         patch_head_of(p, cfg), &out.patch_tape);
  }
}

template <typename S>
void accumulate(Mat<S>& dst, const MatD& src) {
  if (dst.size() == 0) dst = Mat<S>::Zero(src.rows(), src.cols());
  dst += src.template cast<S>();
}

template <typename S>
void backward_view(ViewPass<S>& vp, const ModelParams<S>& p, const ModelConfig& cfg,
                   ModelParams<S>& g) {
  const bool any = vp.d_cls_logits.size() || vp.d_bottleneck.size() || vp.d_patch_logits.size() ||
                   vp.d_patch_tokens.size();
  if (!any) return;
  const int d = cfg.dim;
  Mat<S> d_tokens = Mat<S>::Zero(vp.enc.tokens.rows(), d);
  if (vp.d_cls_logits.size() || vp.d_bottleneck.size()) {
    Mat<S> dl = vp.d_cls_logits.size() ? vp.d_cls_logits
                                       : Mat<S>::Zero(1, vp.cls_logits.cols());
    const Mat<S>* db = vp.d_bottleneck.size() ? &vp.d_bottleneck : nullptr;
    d_tokens.row(0) += head_backward<S>(vp.cls_tape, dl, db, p.cls_head, g.cls_head);
  }
  if (vp.d_patch_logits.size()) {
    HeadParams<S>& gh = cfg.share_heads ? g.cls_head : g.patch_head;
    const Mat<S> dp = head_backward<S>(vp.patch_tape, vp.d_patch_logits, nullptr, patch_head_of(p, cfg), gh);
    for (std::size_t i = 0; i < vp.rows.size(); ++i) d_tokens.row(vp.enc.prefix + vp.rows[i]) += dp.row(i);
  }
  if (vp.d_patch_tokens.size()) d_tokens.bottomRows(vp.d_patch_tokens.rows()) += vp.d_patch_tokens;
  encode_backward<S>(vp.tape, d_tokens, p.encoder, cfg, g.encoder);
}

template <typename S>
void add_params(ModelParams<S>& dst, ModelParams<S>& src) {
  auto d = param_refs(dst);
  auto s = param_refs(src);
  for (std::size_t i = 0; i < d.size(); ++i) *d[i].value += *s[i].value;
}

}  // namespace

template <typename S>
LossParts student_loss(const ModelParams<S>& params, const PreparedBatch& batch,
                       const Targets& targets, const SlimConfig& cfg, ModelParams<S>* grads,
                       int workers) {
  const std::size_t nb = batch.size();
  if (nb == 0) throw ValidationError("student_loss: empty batch");
  const DistillConfig& dc = cfg.distill;
  const double inv_b = 1.0 / static_cast<double>(nb);
  const bool want_grad = grads != nullptr;

  std::vector<SamplePass<S>> passes(nb);
  std::vector<std::array<double, 2>> mfm(nb), glcl(nb);

  parallel_for(nb, workers, [&](std::size_t b) {
    const PreparedSample& ps = batch[b];
    SamplePass<S>& sp = passes[b];
    for (int a = 0; a < 2; ++a) forward_view<S>(ps.globals[a], true, true, params, cfg.model, sp.globals[a]);
    if (dc.glcl_global_unmasked) {
      sp.has_clean = true;
      for (int a = 0; a < 2; ++a) forward_view<S>(ps.globals[a], false, false, params, cfg.model, sp.clean[a]);
    }
    for (int a = 0; a < 2; ++a) {
      sp.locals[a].resize(ps.locals[a].size());
      for (std::size_t i = 0; i < ps.locals[a].size(); ++i)
        forward_view<S>(ps.locals[a][i], true, false, params, cfg.model, sp.locals[a][i]);
    }

    for (int a = 0; a < 2; ++a) {
      // Masked feature modeling on the masked cells of global view a.
      ViewPass<S>& g = sp.globals[a];
      mfm[b][a] = 0.0;
      if (!g.rows.empty()) {
        const MatD tp = gather_rows<double>(targets.patch[b][a], g.rows, 0);
        const MatD logits = to_double<S>(g.patch_logits);
        const MatD slog = log_softmax_temp(logits, dc.student_temp);
        const double denom = dc.mfm_reduction == Reduction::Mean ? static_cast<double>(g.rows.size()) : 1.0;
        mfm[b][a] = -(tp.array() * slog.array()).sum() / denom;
        if (want_grad)
          accumulate<S>(g.d_patch_logits, cross_entropy_logit_grad(tp, logits, dc.student_temp) *
                                              (0.5 * inv_b / denom));
      }

      // Contrast the teacher's global view a against the other global view
      // and the local crops anchored to a.
      std::vector<ViewPass<S>*> views;
      views.push_back(&sp.contrast_global(1 - a));
      for (auto& l : sp.locals[a]) views.push_back(&l);
      const MatD& tc = targets.cls[b][a];
      const double scale = dc.glcl_reduction == Reduction::Mean ? 1.0 / static_cast<double>(views.size()) : 1.0;
      double sum = 0.0;
      for (ViewPass<S>* v : views) {
        const MatD logits = to_double<S>(v->cls_logits);
        sum -= tc.row(0).dot(log_softmax_temp(logits, dc.student_temp).row(0));
        if (want_grad && dc.lambda_glcl != 0.0)
          accumulate<S>(v->d_cls_logits, cross_entropy_logit_grad(tc, logits, dc.student_temp) *
                                             (dc.lambda_glcl * 0.5 * inv_b * scale));
      }
      glcl[b][a] = sum * scale;
    }
  });

  // KoLeo spreads the per-crop features across the batch.
  double koleo = 0.0;
  if (nb >= 2) {
    for (int a = 0; a < 2; ++a) {
      const bool cls = dc.koleo_target == KoleoTarget::Cls;
      const int width = cls ? cfg.model.head_bottleneck : cfg.model.dim;
      MatD feats(nb, width);
      for (std::size_t b = 0; b < nb; ++b) {
        ViewPass<S>& v = passes[b].contrast_global(a);
        feats.row(b) = cls ? to_double<S>(v.cls_tape.h3).row(0)
                           : to_double<S>(v.enc.patches().colwise().mean().eval()).row(0);
      }
      MatD fg;
      koleo += 0.5 * koleo_loss(feats, want_grad ? &fg : nullptr);
      if (want_grad && dc.koleo_weight != 0.0) {
        fg *= 0.5 * dc.koleo_weight;
        for (std::size_t b = 0; b < nb; ++b) {
          ViewPass<S>& v = passes[b].contrast_global(a);
          if (cls) {
            accumulate<S>(v.d_bottleneck, fg.row(b));
          } else {
            const Eigen::Index np = v.enc.tokens.rows() - v.enc.prefix;
            MatD rows = fg.row(b).replicate(np, 1) / static_cast<double>(np);
            accumulate<S>(v.d_patch_tokens, rows);
          }
        }
      }
    }
  }

  if (want_grad) {
    // Per-sample buffers summed in sample order keep the result independent
    // of the worker count.
    const std::size_t wave = static_cast<std::size_t>(std::max(1, workers));
    std::vector<ModelParams<S>> buffers(std::min(wave, nb));
    for (std::size_t start = 0; start < nb; start += wave) {
      const std::size_t count = std::min(wave, nb - start);
      parallel_for(count, workers, [&](std::size_t i) {
        ModelParams<S>& buf = buffers[i];
        buf = zeros_like(params);
        SamplePass<S>& sp = passes[start + i];
        for (int a = 0; a < 2; ++a) {
          backward_view<S>(sp.globals[a], params, cfg.model, buf);
          if (sp.has_clean) backward_view<S>(sp.clean[a], params, cfg.model, buf);
          for (auto& l : sp.locals[a]) backward_view<S>(l, params, cfg.model, buf);
        }
      });
      for (std::size_t i = 0; i < count; ++i) add_params(*grads, buffers[i]);
    }
  }

  std::array<double, 2> mfm_avg{0.0, 0.0}, glcl_avg{0.0, 0.0};
  for (std::size_t b = 0; b < nb; ++b)
    for (int a = 0; a < 2; ++a) {
      mfm_avg[a] += mfm[b][a] * inv_b;
      glcl_avg[a] += glcl[b][a] * inv_b;
    }
  return total_loss(mfm_avg, glcl_avg, koleo, dc);
}

double grad_norm(ModelParams<float>& grads) {
  double sq = 0.0;
  for (auto& r : param_refs(grads)) sq += r.value->template cast<double>().squaredNorm();
  return std::sqrt(sq);
}

double clip_grad_norm(ModelParams<float>& grads, double max_norm) {
  const double norm = grad_norm(grads);
  if (norm > max_norm) {
    const float scale = static_cast<float>(max_norm / norm);
    for (auto& r : param_refs(grads)) *r.value *= scale;
  }
  return norm;
}

template <typename S>
void adamw_update(const std::vector<ParamRef<S>>& p, const std::vector<ParamRef<S>>& g,
                  const std::vector<ParamRef<S>>& m, const std::vector<ParamRef<S>>& v,
                  std::int64_t step, double lr, const TrainConfig& cfg) {
  if (p.size() != g.size() || p.size() != m.size() || p.size() != v.size())
    throw ValidationError("adamw_update: parameter lists differ in length");
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  const S b1 = static_cast<S>(cfg.beta1), b2 = static_cast<S>(cfg.beta2);
  const S step_size = static_cast<S>(lr / bc1);
  const S inv_sqrt_bc2 = static_cast<S>(1.0 / std::sqrt(bc2));
  const S eps = static_cast<S>(cfg.adam_eps);
  const S decay = static_cast<S>(1.0 - lr * cfg.weight_decay);
  for (std::size_t i = 0; i < p.size(); ++i) {
    auto& pm = *p[i].value;
    const auto& gm = *g[i].value;
    auto& mm = *m[i].value;
    auto& vm = *v[i].value;
    mm = b1 * mm + (S(1) - b1) * gm;
    vm.array() = b2 * vm.array() + (S(1) - b2) * gm.array().square();
    if (p[i].decay) pm *= decay;
    pm.array() -= step_size * mm.array() / (vm.array().sqrt() * inv_sqrt_bc2 + eps);
  }
}

void adamw_step(ModelParams<float>& params, ModelParams<float>& grads, AdamState& state, double lr,
                const TrainConfig& cfg) {
  state.step += 1;
  adamw_update<float>(param_refs(params), param_refs(grads), param_refs(state.m),
                      param_refs(state.v), state.step, lr, cfg);
}

std::string metrics_to_json(const StepMetrics& m) {
  nlohmann::json j = {{"step", m.step}, {"mfm", m.mfm}, {"glcl", m.glcl}, {"koleo", m.koleo},
                      {"total", m.total}, {"tau", m.tau}, {"lr", m.lr}};
  return j.dump();
}

StepMetrics train_step(const std::vector<const SkeletonSequence*>& batch, TrainState& state,
                       const SlimConfig& cfg, const SkeletonTopology& topo, int steps_per_epoch,
                       int workers) {
  const std::uint64_t step_seed = state.rng.next_u64();
  const PreparedBatch prepared = prepare_batch(batch, topo, cfg, step_seed, workers);
  const Targets targets = teacher_targets(state.teacher, prepared, cfg, workers);
  ModelParams<float> grads = zeros_like(state.student);
  const LossParts parts = student_loss(state.student, prepared, targets, cfg, &grads, workers);

  const std::pair<const char*, double> terms[] = {
      {"mfm", parts.mfm}, {"glcl", parts.glcl}, {"koleo", parts.koleo}, {"total", parts.total}};
  for (const auto& [name, value] : terms)
    if (!std::isfinite(value))
      throw NumericError("non-finite " + std::string(name) + " loss at step " +
                         std::to_string(state.step) + " (mfm=" + std::to_string(parts.mfm) +
                         ", glcl=" + std::to_string(parts.glcl) + ", koleo=" +
                         std::to_string(parts.koleo) + ")");

  const std::int64_t total_steps = static_cast<std::int64_t>(cfg.train.epochs) * steps_per_epoch;
  StepMetrics m;
  m.step = state.step;
  m.mfm = parts.mfm;
  m.glcl = parts.glcl;
  m.koleo = parts.koleo;
  m.total = parts.total;
  m.lr = lr_schedule(static_cast<double>(state.step), steps_per_epoch, cfg.train);
  m.tau = tau_schedule(static_cast<double>(state.step), total_steps, cfg.train);
  m.grad_norm = clip_grad_norm(grads, cfg.train.grad_clip);

  adamw_step(state.student, grads, state.adam, m.lr, cfg.train);
  renormalize_prototypes(state.student);
  ema_update(state.teacher, state.student, m.tau);
  renormalize_prototypes(state.teacher);
  state.step += 1;
  return m;
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = Rng::derive(seed, {kShuffleStream, static_cast<std::uint64_t>(epoch)});
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

PretrainResult pretrain(const LabeledDataset& dataset, const SlimConfig& cfg,
                        const PretrainOptions& opts) {
  cfg.validate();
  if (dataset.items.empty()) throw ValidationError("pretrain: dataset is empty");
  const std::size_t n = dataset.items.size();
  const int bs = cfg.train.batch_size;
  const int spe = static_cast<int>((n + bs - 1) / bs);
  const std::int64_t total = static_cast<std::int64_t>(cfg.train.epochs) * spe;

  PretrainResult res;
  if (opts.resume) {
    const ModelConfig expected = cfg.model;
    res.state = load_checkpoint(*opts.resume, &expected, opts.force).state;
  } else {
    res.state = init_train_state(cfg);
  }

  std::error_code ec;
  std::filesystem::create_directories(opts.out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + opts.out_dir.string() + ": " + ec.message());

  auto save = [&](const std::filesystem::path& path) {
    try {
      save_checkpoint(res.state, cfg, path);
    } catch (const IoError& e) {
      throw IoError(std::string(e.what()) + " (at step " + std::to_string(res.state.step) + ")");
    }
  };

  const std::int64_t stop = opts.stop_at_step >= 0 ? std::min(opts.stop_at_step, total) : total;
  int cached_epoch = -1;
  std::vector<std::size_t> order;
  while (res.state.step < stop) {
    const std::int64_t s = res.state.step;
    const int epoch = static_cast<int>(s / spe);
    if (epoch != cached_epoch) {
      order = epoch_order(n, cfg.train.seed, epoch);
      cached_epoch = epoch;
    }
    const std::size_t begin = static_cast<std::size_t>(s % spe) * bs;
    const std::size_t end = std::min(n, begin + bs);
    std::vector<const SkeletonSequence*> batch;
    for (std::size_t i = begin; i < end; ++i) batch.push_back(&dataset.items[order[i]].sequence);

    const StepMetrics m = train_step(batch, res.state, cfg, dataset.topology, spe, opts.workers);
    res.metrics.push_back(m);
    if (opts.metrics_out) *opts.metrics_out << metrics_to_json(m) << '\n' << std::flush;
    if (opts.on_step) opts.on_step(m);
    if (cfg.train.checkpoint_every > 0 && res.state.step % cfg.train.checkpoint_every == 0) {
      char name[64];
      std::snprintf(name, sizeof name, "step_%06lld.ckpt", static_cast<long long>(res.state.step));
      save(opts.out_dir / name);
    }
  }
  res.checkpoint = opts.out_dir / (res.state.step == total ? "final.ckpt" : "last.ckpt");
  save(res.checkpoint);
  return res;
}

template void adamw_update(const std::vector<ParamRef<float>>&, const std::vector<ParamRef<float>>&,
                           const std::vector<ParamRef<float>>&, const std::vector<ParamRef<float>>&,
                           std::int64_t, double, const TrainConfig&);
template void adamw_update(const std::vector<ParamRef<double>>&, const std::vector<ParamRef<double>>&,
                           const std::vector<ParamRef<double>>&, const std::vector<ParamRef<double>>&,
                           std::int64_t, double, const TrainConfig&);
template Targets teacher_targets(const ModelParams<float>&, const PreparedBatch&, const SlimConfig&, int);
template Targets teacher_targets(const ModelParams<double>&, const PreparedBatch&, const SlimConfig&, int);
template LossParts student_loss(const ModelParams<float>&, const PreparedBatch&, const Targets&,
                                const SlimConfig&, ModelParams<float>*, int);
template LossParts student_loss(const ModelParams<double>&, const PreparedBatch&, const Targets&,
                                const SlimConfig&, ModelParams<double>*, int);

}  // namespace slim

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "slim/config.hpp"
#include "slim/encoder.hpp"
#include "slim/objective.hpp"
#include "slim/rng.hpp"
#include "slim/skeldata.hpp"

namespace slim {

// Linear warmup from 0 over warmup_epochs * steps_per_epoch steps, then
// cosine from base_lr to final_lr, reaching final_lr at the last step.
double lr_schedule(double step, int steps_per_epoch, const TrainConfig& cfg);
double tau_schedule(double step, std::int64_t total_steps, const TrainConfig& cfg);

struct AdamState {
  ModelParams<float> m;
  ModelParams<float> v;
  std::int64_t step = 0;
};

struct TrainState {
  ModelParams<float> student;
  ModelParams<float> teacher;
  AdamState adam;  // student moments only
  std::int64_t step = 0;  // completed optimizer steps
  Rng rng;                // draws one seed per step
  std::uint64_t config_hash = 0;
};

TrainState init_train_state(const SlimConfig& cfg);

struct PreparedView {
  MatD inputs;  // N x Dp patch inputs
  TubeMask mask;
  bool masked = false;
  ViewKind kind = ViewKind::Global1;
};

// Augmented, masked views of one sample. locals[a] are anchored to globals[a].
struct PreparedSample {
  std::array<PreparedView, 2> globals;
  std::array<std::vector<PreparedView>, 2> locals;
};

using PreparedBatch = std::vector<PreparedSample>;

// Views -> SAA -> masks for one sequence, driven entirely by `rng`.
PreparedSample prepare_sample(const SkeletonSequence& seq, const SkeletonTopology& topo,
                              const SlimConfig& cfg, Rng& rng);

// Sample b draws from Rng::derive(step_seed, {b}).
PreparedBatch prepare_batch(const std::vector<const SkeletonSequence*>& batch,
                            const SkeletonTopology& topo, const SlimConfig& cfg,
                            std::uint64_t step_seed, int workers);

// Sinkhorn-centered teacher distributions. cls[b][a] is 1 x K; patch[b][a]
// has one row per grid cell, filled at the cells masked in the student's
// view a (other rows are zero).
struct Targets {
  std::vector<std::array<MatD, 2>> cls;
  std::vector<std::array<MatD, 2>> patch;
};

template <typename S>
Targets teacher_targets(const ModelParams<S>& teacher, const PreparedBatch& batch,
                        const SlimConfig& cfg, int workers);

// Full objective on the student; accumulates parameter gradients into
// `grads` when non-null (must be shaped like params and zeroed).
template <typename S>
LossParts student_loss(const ModelParams<S>& params, const PreparedBatch& batch,
                       const Targets& targets, const SlimConfig& cfg, ModelParams<S>* grads,
                       int workers);

// Returns the pre-clipping global norm.
double clip_grad_norm(ModelParams<float>& grads, double max_norm);
double grad_norm(ModelParams<float>& grads);

// Decoupled weight decay Adam over parallel parameter lists; `step` is the
// 1-based update count used for bias correction. Decay applies where
// params[i].decay is set.
template <typename S>
void adamw_update(const std::vector<ParamRef<S>>& params, const std::vector<ParamRef<S>>& grads,
                  const std::vector<ParamRef<S>>& m, const std::vector<ParamRef<S>>& v,
                  std::int64_t step, double lr, const TrainConfig& cfg);

void adamw_step(ModelParams<float>& params, ModelParams<float>& grads, AdamState& state, double lr,
                const TrainConfig& cfg);

struct StepMetrics {
  std::int64_t step = 0;
  double mfm = 0.0;
  double glcl = 0.0;
  double koleo = 0.0;
  double total = 0.0;
  double tau = 0.0;
  double lr = 0.0;
  double grad_norm = 0.0;

  bool operator==(const StepMetrics&) const = default;
};

std::string metrics_to_json(const StepMetrics& m);

StepMetrics train_step(const std::vector<const SkeletonSequence*>& batch, TrainState& state,
                       const SlimConfig& cfg, const SkeletonTopology& topo, int steps_per_epoch,
                       int workers);

// Epoch e visits the dataset in the order of a permutation derived from
// (seed, e).
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch);

struct PretrainOptions {
  std::filesystem::path out_dir;
  int workers = 1;
  std::optional<std::filesystem::path> resume;
  bool force = false;
  std::ostream* metrics_out = nullptr;  // NDJSON
  // Stop after this many completed steps (for interrupted runs); -1 = all.
  std::int64_t stop_at_step = -1;
  std::function<void(const StepMetrics&)> on_step;
};

struct PretrainResult {
  TrainState state;
  std::filesystem::path checkpoint;
  std::vector<StepMetrics> metrics;
};

PretrainResult pretrain(const LabeledDataset& dataset, const SlimConfig& cfg,
                        const PretrainOptions& opts);

}  // namespace slim

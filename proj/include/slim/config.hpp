#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "slim/augment.hpp"
#include "slim/encoder.hpp"
#include "slim/masking.hpp"
#include "slim/objective.hpp"
#include "slim/views.hpp"

namespace slim {

enum class TauRamp { Cosine, Linear };

struct TrainConfig {
  int epochs = 150;
  int warmup_epochs = 20;
  double base_lr = 2.0e-4;
  double final_lr = 1.0e-6;
  double tau_start = 0.994;
  double tau_end = 1.0;
  TauRamp tau_ramp = TauRamp::Cosine;
  int batch_size = 32;
  double weight_decay = 0.05;
  double grad_clip = 3.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  // Write a checkpoint every N steps (0: only the final one).
  int checkpoint_every = 0;

  void validate() const;
};

enum class RepresentationSource { Cls, PatchMean };

struct ProbeConfig {
  int epochs = 100;
  double lr = 1e-2;
  int batch_size = 32;
  double weight_decay = 0.0;
  bool standardize = false;
  RepresentationSource source = RepresentationSource::Cls;
  bool use_teacher = true;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SlimConfig {
  std::string profile = "tiny";
  ModelConfig model = ModelConfig::tiny();
  DistillConfig distill;
  TrainConfig train;
  AugConfig augment;
  MaskConfig mask;
  ViewConfig views;
  ProbeConfig probe;

  void validate() const;

  static SlimConfig tiny();
  static SlimConfig paper();
  static SlimConfig profile_named(const std::string& name);
};

// Starts from the profile named by the "profile" key (default tiny) and
// overrides every key present. Unknown keys are rejected.
SlimConfig parse_config(const std::string& json_text);
SlimConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const SlimConfig& cfg, int indent = 2);
std::string model_config_json(const ModelConfig& cfg);

// FNV-1a 64 over the canonical model configuration JSON.
std::uint64_t model_config_hash(const ModelConfig& cfg);

std::string to_string(RepresentationSource s);
std::string to_string(TauRamp r);

}  // namespace slim

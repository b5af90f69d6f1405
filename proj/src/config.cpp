#include "slim/config.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "slim/error.hpp"

namespace slim {

using nlohmann::json;

void TrainConfig::validate() const {
  if (epochs < 0) throw ValidationError("epochs must be >= 0");
  if (warmup_epochs < 0 || (epochs > 0 && warmup_epochs >= epochs))
    throw ValidationError("warmup_epochs must be smaller than epochs");
  if (!(base_lr > 0.0 && final_lr > 0.0)) throw ValidationError("learning rates must be positive");
  if (tau_start < 0.0 || tau_start > 1.0 || tau_end < 0.0 || tau_end > 1.0)
    throw ValidationError("tau must lie in [0, 1]");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (weight_decay < 0.0) throw ValidationError("weight_decay must be >= 0");
  if (!(grad_clip > 0.0)) throw ValidationError("grad_clip must be positive");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
    throw ValidationError("adam betas must lie in [0, 1)");
  if (!(adam_eps > 0.0)) throw ValidationError("adam_eps must be positive");
  if (checkpoint_every < 0) throw ValidationError("checkpoint_every must be >= 0");
}

void ProbeConfig::validate() const {
  if (epochs < 1) throw ValidationError("probe epochs must be >= 1");
  if (!(lr > 0.0)) throw ValidationError("probe lr must be positive");
  if (batch_size < 1) throw ValidationError("probe batch_size must be >= 1");
  if (weight_decay < 0.0) throw ValidationError("probe weight_decay must be >= 0");
}

void SlimConfig::validate() const {
  model.validate();
  distill.validate();
  train.validate();
  augment.validate();
  mask.validate();
  probe.validate();
  if (views.global_frames != model.frames)
    throw ValidationError("views.global_frames must equal model.frames");
  for (const auto& l : views.locals)
    if (l.frames % model.patch_t != 0)
      throw ValidationError("local view length must be divisible by patch_t");
}

SlimConfig SlimConfig::tiny() {
  SlimConfig c;
  c.profile = "tiny";
  c.model = ModelConfig::tiny();
  c.train.epochs = 30;
  c.train.warmup_epochs = 3;
  c.train.base_lr = 1e-3;
  return c;
}

SlimConfig SlimConfig::paper() {
  SlimConfig c;
  c.profile = "paper";
  c.model = ModelConfig::paper();
  c.train.batch_size = 768;
  return c;
}

SlimConfig SlimConfig::profile_named(const std::string& name) {
  if (name == "tiny") return tiny();
  if (name == "paper") return paper();
  throw ValidationError("unknown profile '" + name + "' (expected tiny or paper)");
}

namespace {

template <typename E>
E parse_enum(const json& v, const std::string& key,
             std::initializer_list<std::pair<const char*, E>> names) {
  const std::string s = v.get<std::string>();
  for (const auto& [n, e] : names)
    if (s == n) return e;
  throw ValidationError("invalid value '" + s + "' for " + key);
}

// Reads `key` from obj into dst if present, tracking consumed keys.
class Reader {
 public:
  Reader(const json& obj, std::string section) : obj_(obj), section_(std::move(section)) {
    if (!obj_.is_object()) throw ValidationError("config section '" + section_ + "' must be an object");
  }

  template <typename T>
  void get(const char* key, T& dst) {
    auto it = obj_.find(key);
    if (it == obj_.end()) return;
    seen_.push_back(key);
    try {
      dst = it->template get<T>();
    } catch (const json::exception&) {
      throw ValidationError("config key " + section_ + "." + key + " has the wrong type");
    }
  }

  const json* raw(const char* key) {
    auto it = obj_.find(key);
    if (it == obj_.end()) return nullptr;
    seen_.push_back(key);
    return &*it;
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it)
      if (std::find(seen_.begin(), seen_.end(), it.key()) == seen_.end())
        throw ValidationError("unknown config key " + section_ + "." + it.key());
  }

 private:
  const json& obj_;
  std::string section_;
  std::vector<std::string> seen_;
};

json model_to_json(const ModelConfig& m) {
  return {{"layers", m.layers},
          {"dim", m.dim},
          {"heads", m.heads},
          {"mlp_ratio", m.mlp_ratio},
          {"patch_t", m.patch_t},
          {"patch_j", m.patch_j},
          {"frames", m.frames},
          {"joints", m.joints},
          {"registers", m.registers},
          {"prototypes", m.prototypes},
          {"head_hidden", m.head_hidden},
          {"head_bottleneck", m.head_bottleneck},
          {"patch_bias", m.patch_bias},
          {"share_heads", m.share_heads},
          {"use_rope", m.use_rope},
          {"rope_base", m.rope_base},
          {"ln_eps", m.ln_eps},
          {"init_std", m.init_std}};
}

void read_model(const json& j, ModelConfig& m) {
  Reader r(j, "model");
  r.get("layers", m.layers);
  r.get("dim", m.dim);
  r.get("heads", m.heads);
  r.get("mlp_ratio", m.mlp_ratio);
  r.get("patch_t", m.patch_t);
  r.get("patch_j", m.patch_j);
  r.get("frames", m.frames);
  r.get("joints", m.joints);
  r.get("registers", m.registers);
  r.get("prototypes", m.prototypes);
  r.get("head_hidden", m.head_hidden);
  r.get("head_bottleneck", m.head_bottleneck);
  r.get("patch_bias", m.patch_bias);
  r.get("share_heads", m.share_heads);
  r.get("use_rope", m.use_rope);
  r.get("rope_base", m.rope_base);
  r.get("ln_eps", m.ln_eps);
  r.get("init_std", m.init_std);
  r.finish();
}

const std::initializer_list<std::pair<const char*, Reduction>> kReductions = {
    {"mean", Reduction::Mean}, {"sum", Reduction::Sum}};

void read_distill(const json& j, DistillConfig& d) {
  Reader r(j, "distill");
  r.get("student_temp", d.student_temp);
  r.get("teacher_temp", d.teacher_temp);
  r.get("sinkhorn_iters", d.sinkhorn_iters);
  r.get("koleo_weight", d.koleo_weight);
  r.get("lambda_glcl", d.lambda_glcl);
  if (auto v = r.raw("mfm_reduction")) d.mfm_reduction = parse_enum(*v, "mfm_reduction", kReductions);
  if (auto v = r.raw("glcl_reduction")) d.glcl_reduction = parse_enum(*v, "glcl_reduction", kReductions);
  if (auto v = r.raw("koleo_target"))
    d.koleo_target = parse_enum<KoleoTarget>(
        *v, "koleo_target", {{"cls", KoleoTarget::Cls}, {"patch_mean", KoleoTarget::PatchMean}});
  r.get("glcl_global_unmasked", d.glcl_global_unmasked);
  r.finish();
}

void read_train(const json& j, TrainConfig& t) {
  Reader r(j, "train");
  r.get("epochs", t.epochs);
  r.get("warmup_epochs", t.warmup_epochs);
  r.get("base_lr", t.base_lr);
  r.get("final_lr", t.final_lr);
  r.get("tau_start", t.tau_start);
  r.get("tau_end", t.tau_end);
  if (auto v = r.raw("tau_ramp"))
    t.tau_ramp = parse_enum<TauRamp>(*v, "tau_ramp", {{"cosine", TauRamp::Cosine}, {"linear", TauRamp::Linear}});
  r.get("batch_size", t.batch_size);
  r.get("weight_decay", t.weight_decay);
  r.get("grad_clip", t.grad_clip);
  r.get("beta1", t.beta1);
  r.get("beta2", t.beta2);
  r.get("adam_eps", t.adam_eps);
  r.get("seed", t.seed);
  r.get("checkpoint_every", t.checkpoint_every);
  r.finish();
}

void read_augment(const json& j, AugConfig& a) {
  Reader r(j, "augment");
  r.get("p_apply", a.p_apply);
  r.get("theta_tilt_deg", a.theta_tilt_deg);
  r.get("theta_vert_deg", a.theta_vert_deg);
  r.get("scale_lo", a.scale_lo);
  r.get("scale_hi", a.scale_hi);
  r.finish();
}

void read_mask(const json& j, MaskConfig& m) {
  Reader r(j, "mask");
  r.get("ratio_lo", m.ratio_lo);
  r.get("ratio_hi", m.ratio_hi);
  r.get("min_area", m.min_area);
  r.get("max_area_fraction", m.max_area_fraction);
  r.get("global_prob", m.global_prob);
  r.get("local_prob", m.local_prob);
  r.get("stall_limit", m.stall_limit);
  if (auto v = r.raw("strategy"))
    m.strategy = parse_enum<MaskStrategy>(
        *v, "strategy", {{"tube", MaskStrategy::Tube}, {"independent", MaskStrategy::Independent}});
  r.finish();
}

void read_views(const json& j, ViewConfig& v) {
  Reader r(j, "views");
  r.get("global_frames", v.global_frames);
  r.get("global_ratio_lo", v.global_ratio_lo);
  r.get("global_ratio_hi", v.global_ratio_hi);
  if (auto arr = r.raw("locals")) {
    if (!arr->is_array()) throw ValidationError("views.locals must be an array");
    v.locals.clear();
    for (const auto& e : *arr) {
      LocalCropSpec s;
      Reader lr(e, "views.locals[]");
      lr.get("frames", s.frames);
      lr.get("ratio_lo", s.ratio_lo);
      lr.get("ratio_hi", s.ratio_hi);
      lr.get("count", s.count);
      lr.finish();
      v.locals.push_back(s);
    }
  }
  r.finish();
}

void read_probe(const json& j, ProbeConfig& p) {
  Reader r(j, "probe");
  r.get("epochs", p.epochs);
  r.get("lr", p.lr);
  r.get("batch_size", p.batch_size);
  r.get("weight_decay", p.weight_decay);
  r.get("standardize", p.standardize);
  if (auto v = r.raw("source"))
    p.source = parse_enum<RepresentationSource>(
        *v, "source", {{"cls", RepresentationSource::Cls}, {"patch_mean", RepresentationSource::PatchMean}});
  r.get("use_teacher", p.use_teacher);
  r.get("seed", p.seed);
  r.finish();
}

}  // namespace

std::string to_string(RepresentationSource s) {
  return s == RepresentationSource::Cls ? "cls" : "patch_mean";
}
std::string to_string(TauRamp r) { return r == TauRamp::Cosine ? "cosine" : "linear"; }

SlimConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("config root must be an object");
  std::string profile = "tiny";
  if (j.contains("profile")) {
    if (!j["profile"].is_string()) throw ValidationError("config key profile must be a string");
    profile = j["profile"].get<std::string>();
  }
  SlimConfig cfg = SlimConfig::profile_named(profile);
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    if (k == "profile") continue;
    if (k == "model") read_model(*it, cfg.model);
    else if (k == "distill") read_distill(*it, cfg.distill);
    else if (k == "train") read_train(*it, cfg.train);
    else if (k == "augment") read_augment(*it, cfg.augment);
    else if (k == "mask") read_mask(*it, cfg.mask);
    else if (k == "views") read_views(*it, cfg.views);
    else if (k == "probe") read_probe(*it, cfg.probe);
    else throw ValidationError("unknown config section '" + k + "'");
  }
  cfg.validate();
  return cfg;
}

SlimConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const SlimConfig& c, int indent) {
  json locals = json::array();
  for (const auto& l : c.views.locals)
    locals.push_back({{"frames", l.frames}, {"ratio_lo", l.ratio_lo}, {"ratio_hi", l.ratio_hi}, {"count", l.count}});
  json j = {
      {"profile", c.profile},
      {"model", model_to_json(c.model)},
      {"distill",
       {{"student_temp", c.distill.student_temp},
        {"teacher_temp", c.distill.teacher_temp},
        {"sinkhorn_iters", c.distill.sinkhorn_iters},
        {"koleo_weight", c.distill.koleo_weight},
        {"lambda_glcl", c.distill.lambda_glcl},
        {"mfm_reduction", to_string(c.distill.mfm_reduction)},
        {"glcl_reduction", to_string(c.distill.glcl_reduction)},
        {"koleo_target", to_string(c.distill.koleo_target)},
        {"glcl_global_unmasked", c.distill.glcl_global_unmasked}}},
      {"train",
       {{"epochs", c.train.epochs},
        {"warmup_epochs", c.train.warmup_epochs},
        {"base_lr", c.train.base_lr},
        {"final_lr", c.train.final_lr},
        {"tau_start", c.train.tau_start},
        {"tau_end", c.train.tau_end},
        {"tau_ramp", to_string(c.train.tau_ramp)},
        {"batch_size", c.train.batch_size},
        {"weight_decay", c.train.weight_decay},
        {"grad_clip", c.train.grad_clip},
        {"beta1", c.train.beta1},
        {"beta2", c.train.beta2},
        {"adam_eps", c.train.adam_eps},
        {"seed", c.train.seed},
        {"checkpoint_every", c.train.checkpoint_every}}},
      {"augment",
       {{"p_apply", c.augment.p_apply},
        {"theta_tilt_deg", c.augment.theta_tilt_deg},
        {"theta_vert_deg", c.augment.theta_vert_deg},
        {"scale_lo", c.augment.scale_lo},
        {"scale_hi", c.augment.scale_hi}}},
      {"mask",
       {{"ratio_lo", c.mask.ratio_lo},
        {"ratio_hi", c.mask.ratio_hi},
        {"min_area", c.mask.min_area},
        {"max_area_fraction", c.mask.max_area_fraction},
        {"global_prob", c.mask.global_prob},
        {"local_prob", c.mask.local_prob},
        {"stall_limit", c.mask.stall_limit},
        {"strategy", c.mask.strategy == MaskStrategy::Tube ? "tube" : "independent"}}},
      {"views",
       {{"global_frames", c.views.global_frames},
        {"global_ratio_lo", c.views.global_ratio_lo},
        {"global_ratio_hi", c.views.global_ratio_hi},
        {"locals", locals}}},
      {"probe",
       {{"epochs", c.probe.epochs},
        {"lr", c.probe.lr},
        {"batch_size", c.probe.batch_size},
        {"weight_decay", c.probe.weight_decay},
        {"standardize", c.probe.standardize},
        {"source", to_string(c.probe.source)},
        {"use_teacher", c.probe.use_teacher},
        {"seed", c.probe.seed}}}};
  return j.dump(indent);
}

std::string model_config_json(const ModelConfig& cfg) { return model_to_json(cfg).dump(); }

std::uint64_t model_config_hash(const ModelConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : model_config_json(cfg)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace slim

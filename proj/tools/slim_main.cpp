#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>

#include "slim/augment.hpp"
#include "slim/checkpoint.hpp"
#include "slim/config.hpp"
#include "slim/error.hpp"
#include "slim/evalkit.hpp"
#include "slim/masking.hpp"
#include "slim/parallel.hpp"
#include "slim/skeldata.hpp"
#include "slim/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };

Level log_level() {
  const char* env = std::getenv("SLIM_LOG");
  if (!env) return Level::Info;
  const std::string v = env;
  if (v == "error") return Level::Error;
  if (v == "warn") return Level::Warn;
  if (v == "debug") return Level::Debug;
  return Level::Info;
}

void log(Level level, const std::string& msg) {
  static const Level threshold = log_level();
  if (level > threshold) return;
  static const char* names[] = {"error", "warn", "info", "debug"};
  std::cerr << "[" << names[static_cast<int>(level)] << "] " << msg << '\n';
}

void print_seed(std::uint64_t seed) { std::cerr << "seed: " << seed << '\n'; }

slim::SlimConfig base_config(const std::string& config_path, const std::string& profile) {
  if (!config_path.empty()) return slim::load_config(config_path);
  return slim::SlimConfig::profile_named(profile.empty() ? "tiny" : profile);
}

fs::path index_path(const fs::path& p) { return fs::is_directory(p) ? p / "index.jsonl" : p; }

std::vector<double> parse_doubles(const std::string& text, std::size_t expected) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw slim::ValidationError("not a number: '" + item + "'");
    }
  }
  if (out.size() != expected)
    throw slim::ValidationError("expected " + std::to_string(expected) + " comma-separated values");
  return out;
}

std::vector<const slim::SkeletonSequence*> sequences(const slim::LabeledDataset& ds) {
  std::vector<const slim::SkeletonSequence*> out;
  for (const auto& it : ds.items) out.push_back(&it.sequence);
  return out;
}

std::vector<int> labels(const slim::LabeledDataset& ds) {
  std::vector<int> out;
  for (const auto& it : ds.items) out.push_back(it.label);
  return out;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

struct Common {
  std::string config;
  std::string profile;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int workers = slim::default_workers();
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON configuration file");
  cmd->add_option("--profile", c.profile, "Built-in profile when no --config is given (tiny|paper)");
  cmd->add_option("--workers", c.workers, "Worker threads for the data pipeline")->check(CLI::PositiveNumber);
}

void add_seed(CLI::App* cmd, Common& c) {
  cmd->add_option_function<std::uint64_t>(
      "--seed", [&c](const std::uint64_t& s) { c.seed = s, c.seed_set = true; }, "Random seed");
}

// --- gen-data ---------------------------------------------------------------

struct GenArgs {
  std::string topo = SLIM_DEFAULT_TOPO;
  std::string out;
  slim::GeneratorConfig gen;
  int test_per_class = 0;
};

int run_gen_data(const Common& c, const GenArgs& a) {
  const auto topo = slim::load_topology(a.topo);
  const std::uint64_t seed = c.seed_set ? c.seed : 0;
  print_seed(seed);
  const auto ds = slim::gen_synthetic(a.gen, topo, seed);
  if (a.test_per_class > 0) {
    if (a.test_per_class >= a.gen.sequences_per_class)
      throw slim::ValidationError("--test-per-class must be smaller than --per-class");
    const auto [train, test] = slim::split_per_class(ds, a.test_per_class);
    slim::save_dataset(train, fs::path(a.out) / "train");
    slim::save_dataset(test, fs::path(a.out) / "test");
    log(Level::Info, "wrote " + std::to_string(train.items.size()) + " train and " +
                         std::to_string(test.items.size()) + " test sequences under " + a.out);
  } else {
    slim::save_dataset(ds, a.out);
    log(Level::Info, "wrote " + std::to_string(ds.items.size()) + " sequences to " + a.out);
  }
  return 0;
}

// --- augment ----------------------------------------------------------------

struct AugArgs {
  std::string in, out;
  std::string topo = SLIM_DEFAULT_TOPO;
  std::string rotate;
  bool mirror = false;
  std::string scale;
};

int run_augment(const Common& c, const AugArgs& a) {
  const auto cfg = base_config(c.config, c.profile);
  const auto topo = slim::load_topology(a.topo);
  slim::SkeletonSequence seq = slim::load_sequence(a.in);
  const bool explicit_mode = !a.rotate.empty() || a.mirror || !a.scale.empty();
  if (explicit_mode) {
    if (!a.rotate.empty()) {
      const auto deg = parse_doubles(a.rotate, 3);
      const double k = 3.14159265358979323846 / 180.0;
      seq = slim::rotate(seq, {deg[0] * k, deg[1] * k, deg[2] * k});
    }
    if (a.mirror) seq = slim::mirror(seq, topo);
    if (!a.scale.empty()) {
      std::vector<double> factors(topo.groups.size(), 1.0);
      std::stringstream ss(a.scale);
      std::string item;
      while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw slim::ValidationError("--scale expects group=factor pairs");
        const std::string name = item.substr(0, eq);
        std::size_t g = 0;
        while (g < topo.groups.size() && topo.groups[g].name != name) ++g;
        if (g == topo.groups.size()) throw slim::ValidationError("unknown joint group '" + name + "'");
        factors[g] = parse_doubles(item.substr(eq + 1), 1)[0];
      }
      seq = slim::scale_bones(seq, topo, factors);
    }
  } else {
    const std::uint64_t seed = c.seed_set ? c.seed : 0;
    print_seed(seed);
    slim::Rng rng(seed);
    slim::View v{seq, {0, seq.frames - 1}, seq.frames, slim::ViewKind::Global1};
    slim::SaaRecord rec;
    seq = slim::apply_saa(v, topo, cfg.augment, rng, &rec).sequence;
    log(Level::Info, std::string("rotate=") + (rec.rotated ? "yes" : "no") +
                         " mirror=" + (rec.mirrored ? "yes" : "no") + " scale=" + (rec.scaled ? "yes" : "no"));
  }
  slim::save_sequence(seq, a.out);
  return 0;
}

// --- mask -------------------------------------------------------------------

struct MaskArgs {
  std::string grid = "8x25";
  std::string topo = SLIM_DEFAULT_TOPO;
  std::optional<double> ratio;
  std::string strategy;
  bool json_out = false;
};

int run_mask(const Common& c, const MaskArgs& a) {
  auto cfg = base_config(c.config, c.profile);
  const auto x = a.grid.find('x');
  if (x == std::string::npos) throw slim::ValidationError("--grid expects TxJ, e.g. 8x25");
  slim::TokenGrid grid;
  try {
    grid.temporal = std::stoi(a.grid.substr(0, x));
    grid.joints = std::stoi(a.grid.substr(x + 1));
  } catch (const std::exception&) {
    throw slim::ValidationError("--grid expects TxJ, e.g. 8x25");
  }
  if (a.ratio) cfg.mask.ratio_lo = cfg.mask.ratio_hi = *a.ratio;
  if (a.strategy == "independent") cfg.mask.strategy = slim::MaskStrategy::Independent;
  else if (a.strategy == "tube") cfg.mask.strategy = slim::MaskStrategy::Tube;
  else if (!a.strategy.empty()) throw slim::ValidationError("--strategy must be tube or independent");
  const auto topo = slim::load_topology(a.topo);
  const std::uint64_t seed = c.seed_set ? c.seed : 0;
  print_seed(seed);
  slim::Rng rng(seed);
  const auto mask = slim::generate_mask(grid, topo, cfg.mask, rng);
  if (a.json_out) {
    json rows = json::array();
    std::stringstream ss(slim::render_mask(mask));
    std::string line;
    while (std::getline(ss, line)) rows.push_back(line);
    std::cout << json{{"grid", {grid.temporal, grid.joints}},
                      {"target", mask.target},
                      {"count", mask.count},
                      {"steps", mask.steps.size()},
                      {"seed", seed},
                      {"rows", rows}}
                     .dump(2)
              << '\n';
  } else {
    std::cout << "target " << mask.target << " masked " << mask.count << " of " << grid.size()
              << " (" << mask.steps.size() << " tubes)\n"
              << slim::render_mask(mask);
  }
  return 0;
}

// --- pretrain ---------------------------------------------------------------

struct PretrainArgs {
  std::string data;
  std::string topo = SLIM_DEFAULT_TOPO;
  std::string out;
  std::string resume;
  std::string metrics_out;
  bool force = false;
  std::optional<int> epochs, batch_size, warmup_epochs;
  std::optional<double> lr;
};

int run_pretrain(const Common& c, const PretrainArgs& a) {
  auto cfg = base_config(c.config, c.profile);
  if (c.seed_set) cfg.train.seed = c.seed;
  if (a.epochs) cfg.train.epochs = *a.epochs;
  if (a.warmup_epochs) cfg.train.warmup_epochs = *a.warmup_epochs;
  if (a.batch_size) cfg.train.batch_size = *a.batch_size;
  if (a.lr) cfg.train.base_lr = *a.lr;
  cfg.validate();
  print_seed(cfg.train.seed);
  const auto topo = slim::load_topology(a.topo);
  const auto ds = slim::load_dataset(index_path(a.data), topo);

  std::ofstream metrics_file;
  slim::PretrainOptions opts;
  opts.out_dir = a.out;
  opts.workers = c.workers;
  opts.force = a.force;
  if (!a.resume.empty()) opts.resume = a.resume;
  if (!a.metrics_out.empty()) {
    metrics_file.open(a.metrics_out, std::ios::app);
    if (!metrics_file) throw slim::IoError("cannot open metrics file " + a.metrics_out);
    opts.metrics_out = &metrics_file;
  } else {
    opts.metrics_out = &std::cout;
  }
  opts.on_step = [](const slim::StepMetrics& m) {
    log(Level::Debug, "step " + std::to_string(m.step) + " total " + fixed(m.total, 4));
  };
  log(Level::Info, "pretraining on " + std::to_string(ds.items.size()) + " sequences, " +
                       std::to_string(cfg.train.epochs) + " epochs, batch " +
                       std::to_string(cfg.train.batch_size));
  const auto res = slim::pretrain(ds, cfg, opts);
  log(Level::Info, "checkpoint written to " + res.checkpoint.string());
  return 0;
}

// --- probe / retrieve -------------------------------------------------------

struct EvalArgs {
  std::string checkpoint;
  std::string train, test;
  std::string topo = SLIM_DEFAULT_TOPO;
  std::string source;
  std::string encoder = "teacher";
  bool standardize = false;
  bool force = false;
  std::optional<int> epochs;
  std::optional<double> lr;
  int k = 1;
  bool json_out = false;
};

struct LoadedEval {
  slim::CheckpointData ckpt;
  slim::RepresentationSource source;
  const slim::EncoderParams<float>* encoder;
};

LoadedEval load_for_eval(const Common& c, const EvalArgs& a, slim::ProbeConfig& probe) {
  LoadedEval le;
  if (!c.config.empty() || !c.profile.empty()) {
    const auto cfg = base_config(c.config, c.profile);
    le.ckpt = slim::load_checkpoint(a.checkpoint, &cfg.model, a.force);
    probe = cfg.probe;
  } else {
    le.ckpt = slim::load_checkpoint(a.checkpoint);
    probe = le.ckpt.config.probe;
  }
  if (a.source == "cls") probe.source = slim::RepresentationSource::Cls;
  else if (a.source == "patch_mean") probe.source = slim::RepresentationSource::PatchMean;
  else if (!a.source.empty()) throw slim::ValidationError("--source must be cls or patch_mean");
  if (a.encoder == "student") probe.use_teacher = false;
  else if (a.encoder == "teacher") probe.use_teacher = true;
  else throw slim::ValidationError("--encoder must be teacher or student");
  if (a.standardize) probe.standardize = true;
  if (a.epochs) probe.epochs = *a.epochs;
  if (a.lr) probe.lr = *a.lr;
  if (c.seed_set) probe.seed = c.seed;
  le.source = probe.source;
  le.encoder = probe.use_teacher ? &le.ckpt.state.teacher.encoder : &le.ckpt.state.student.encoder;
  return le;
}

int run_probe(const Common& c, const EvalArgs& a) {
  slim::ProbeConfig probe;
  const auto le = load_for_eval(c, a, probe);
  print_seed(probe.seed);
  const auto topo = slim::load_topology(a.topo);
  const auto train = slim::load_dataset(index_path(a.train), topo);
  const auto test = slim::load_dataset(index_path(a.test), topo);
  const auto& model = le.ckpt.config.model;
  const auto xtr = slim::extract_representations(*le.encoder, sequences(train), model, le.source, c.workers);
  const auto xte = slim::extract_representations(*le.encoder, sequences(test), model, le.source, c.workers);
  const auto res = slim::linear_probe(xtr, labels(train), xte, labels(test), probe);
  if (a.json_out) {
    std::cout << json{{"accuracy", res.accuracy},
                      {"train_accuracy", res.train_accuracy},
                      {"n_train", res.n_train},
                      {"n_test", res.n_test},
                      {"source", slim::to_string(le.source)},
                      {"encoder", probe.use_teacher ? "teacher" : "student"},
                      {"seed", probe.seed}}
                     .dump(2)
              << '\n';
  } else {
    std::cout << "accuracy " << fixed(res.accuracy, 4) << " (train " << fixed(res.train_accuracy, 4)
              << ", n_train " << res.n_train << ", n_test " << res.n_test << ", source "
              << slim::to_string(le.source) << ")\n";
  }
  return 0;
}

int run_retrieve(const Common& c, const EvalArgs& a) {
  slim::ProbeConfig probe;
  const auto le = load_for_eval(c, a, probe);
  const auto topo = slim::load_topology(a.topo);
  const auto gallery = slim::load_dataset(index_path(a.train), topo);
  const auto query = slim::load_dataset(index_path(a.test), topo);
  const auto& model = le.ckpt.config.model;
  const auto xg = slim::extract_representations(*le.encoder, sequences(gallery), model, le.source, c.workers);
  const auto xq = slim::extract_representations(*le.encoder, sequences(query), model, le.source, c.workers);
  const double acc = slim::knn_retrieve(xg, labels(gallery), xq, labels(query), a.k);
  if (a.json_out) {
    std::cout << json{{"accuracy", acc},
                      {"n_train", static_cast<int>(gallery.items.size())},
                      {"n_test", static_cast<int>(query.items.size())},
                      {"source", slim::to_string(le.source)},
                      {"encoder", probe.use_teacher ? "teacher" : "student"},
                      {"k", a.k}}
                     .dump(2)
              << '\n';
  } else {
    std::cout << "accuracy " << fixed(acc, 4) << " (gallery " << gallery.items.size() << ", queries "
              << query.items.size() << ", k " << a.k << ", source " << slim::to_string(le.source) << ")\n";
  }
  return 0;
}

// --- flops ------------------------------------------------------------------

struct FlopsArgs {
  std::vector<std::int64_t> tokens;
  bool json_out = false;
};

int run_flops(const Common& c, const FlopsArgs& a) {
  const auto cfg = base_config(c.config, c.profile.empty() && c.config.empty() ? "paper" : c.profile);
  std::vector<slim::FlopsScenario> scenarios;
  if (a.tokens.empty()) {
    scenarios = slim::default_flops_scenarios();
  } else {
    for (std::size_t i = 0; i < a.tokens.size(); ++i)
      scenarios.push_back({"tokens_" + std::to_string(a.tokens[i]), a.tokens[i],
                           "tokens_" + std::to_string(a.tokens[0]), 0.0});
  }
  const auto rows = slim::flops_report(cfg.model, scenarios);
  const std::string convention =
      "FLOPs = 2 x MACs over patch projection, QKV, attention scores, attention x values, output "
      "projection and MLP; LayerNorm, softmax, RoPE and heads excluded";
  if (a.json_out) {
    json jr = json::array();
    for (const auto& r : rows) {
      json row = {{"scenario", r.scenario}, {"tokens", r.tokens}, {"gflops", r.gflops},
                  {"baseline", r.baseline}, {"ratio", r.ratio}};
      row["paper_ratio"] = r.paper_ratio > 0.0 ? json(r.paper_ratio) : json(nullptr);
      jr.push_back(row);
    }
    std::cout << json{{"profile", cfg.profile},
                      {"layers", cfg.model.layers},
                      {"dim", cfg.model.dim},
                      {"convention", convention},
                      {"rows", jr}}
                     .dump(2)
              << '\n';
  } else {
    std::printf("%-24s %8s %12s %-24s %9s %11s\n", "scenario", "tokens", "GFLOPs", "baseline", "ratio",
                "published");
    for (const auto& r : rows)
      std::printf("%-24s %8lld %12.6f %-24s %9.3f %11s\n", r.scenario.c_str(),
                  static_cast<long long>(r.tokens), r.gflops, r.baseline.c_str(), r.ratio,
                  r.paper_ratio > 0.0 ? fixed(r.paper_ratio, 2).c_str() : "-");
    std::printf("convention: %s\n", convention.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decoder-free masked skeleton representation learning"};
  app.require_subcommand(1);
  Common common;

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a labeled synthetic skeleton dataset");
  add_common(gen_cmd, common);
  add_seed(gen_cmd, common);
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();
  gen_cmd->add_option("--topo", gen.topo, "Topology JSON");
  gen_cmd->add_option("--classes", gen.gen.num_classes, "Number of classes");
  gen_cmd->add_option("--per-class", gen.gen.sequences_per_class, "Sequences per class");
  gen_cmd->add_option("--frames", gen.gen.frames, "Frames per sequence");
  gen_cmd->add_option("--noise", gen.gen.noise_std, "Additive Gaussian noise std (meters)");
  gen_cmd->add_option("--yaw-jitter", gen.gen.yaw_jitter_deg, "Per-sequence yaw jitter (degrees)");
  gen_cmd->add_option("--phase-jitter", gen.gen.phase_jitter, "Per-sequence phase jitter (radians)");
  gen_cmd->add_option("--scale-jitter", gen.gen.scale_jitter, "Per-sequence body scale jitter");
  gen_cmd->add_option("--speed-jitter", gen.gen.speed_jitter, "Per-sequence speed jitter");
  gen_cmd->add_option("--tilt-jitter", gen.gen.tilt_jitter_deg, "Per-sequence tilt jitter (degrees)");
  gen_cmd->add_option("--bone-scale-jitter", gen.gen.bone_scale_jitter, "Per-sequence, per-group bone length jitter");
  gen_cmd->add_option("--mirror-prob", gen.gen.mirror_prob, "Probability of a left/right swapped sequence");
  gen_cmd->add_option("--test-per-class", gen.test_per_class,
                      "Hold out this many sequences per class into <out>/test (rest in <out>/train)");

  AugArgs aug;
  auto* aug_cmd = app.add_subcommand("augment", "Apply skeleton-aware augmentations to one sequence");
  add_common(aug_cmd, common);
  add_seed(aug_cmd, common);
  aug_cmd->add_option("--in", aug.in, "Input .skel file")->required();
  aug_cmd->add_option("--out", aug.out, "Output .skel file")->required();
  aug_cmd->add_option("--topo", aug.topo, "Topology JSON");
  aug_cmd->add_option("--rotate", aug.rotate, "Rotation angles alpha,beta,gamma in degrees");
  aug_cmd->add_flag("--mirror", aug.mirror, "Mirror left and right");
  aug_cmd->add_option("--scale", aug.scale, "Per-group bone scale factors, e.g. left_arm=1.1,torso=0.9");

  MaskArgs mask;
  auto* mask_cmd = app.add_subcommand("mask", "Generate and print one token mask");
  add_common(mask_cmd, common);
  add_seed(mask_cmd, common);
  mask_cmd->add_option("--grid", mask.grid, "Token grid TxJ");
  mask_cmd->add_option("--topo", mask.topo, "Topology JSON");
  mask_cmd->add_option("--ratio", mask.ratio, "Fixed mask ratio (overrides the configured range)");
  mask_cmd->add_option("--strategy", mask.strategy, "tube or independent");
  mask_cmd->add_flag("--json", mask.json_out, "Machine-readable output");

  PretrainArgs pre;
  auto* pre_cmd = app.add_subcommand("pretrain", "Self-supervised pretraining");
  add_common(pre_cmd, common);
  add_seed(pre_cmd, common);
  pre_cmd->add_option("--data", pre.data, "Dataset directory or index.jsonl")->required();
  pre_cmd->add_option("--topo", pre.topo, "Topology JSON");
  pre_cmd->add_option("--out", pre.out, "Checkpoint directory")->required();
  pre_cmd->add_option("--resume", pre.resume, "Resume from this checkpoint");
  pre_cmd->add_flag("--force", pre.force, "Resume even if the model configuration differs");
  pre_cmd->add_option("--metrics-out", pre.metrics_out, "Append NDJSON metrics here instead of stdout");
  pre_cmd->add_option("--epochs", pre.epochs, "Override train.epochs");
  pre_cmd->add_option("--warmup-epochs", pre.warmup_epochs, "Override train.warmup_epochs");
  pre_cmd->add_option("--batch-size", pre.batch_size, "Override train.batch_size");
  pre_cmd->add_option("--lr", pre.lr, "Override train.base_lr");

  EvalArgs probe_args;
  auto* probe_cmd = app.add_subcommand("probe", "Linear probe on frozen representations");
  add_common(probe_cmd, common);
  add_seed(probe_cmd, common);
  probe_cmd->add_option("--checkpoint", probe_args.checkpoint, "Checkpoint file")->required();
  probe_cmd->add_option("--data", probe_args.train, "Training split (directory or index)")->required();
  probe_cmd->add_option("--test", probe_args.test, "Test split (directory or index)")->required();
  probe_cmd->add_option("--topo", probe_args.topo, "Topology JSON");
  probe_cmd->add_option("--source", probe_args.source, "cls or patch_mean");
  probe_cmd->add_option("--encoder", probe_args.encoder, "teacher or student");
  probe_cmd->add_flag("--standardize", probe_args.standardize, "Standardize features with train statistics");
  probe_cmd->add_flag("--force", probe_args.force, "Ignore model configuration mismatch");
  probe_cmd->add_option("--epochs", probe_args.epochs, "Probe epochs");
  probe_cmd->add_option("--lr", probe_args.lr, "Probe learning rate");
  probe_cmd->add_flag("--json", probe_args.json_out, "Machine-readable output");

  EvalArgs ret;
  auto* ret_cmd = app.add_subcommand("retrieve", "k-NN retrieval on frozen representations");
  add_common(ret_cmd, common);
  ret_cmd->add_option("--checkpoint", ret.checkpoint, "Checkpoint file")->required();
  ret_cmd->add_option("--gallery", ret.train, "Gallery split (directory or index)")->required();
  ret_cmd->add_option("--query", ret.test, "Query split (directory or index)")->required();
  ret_cmd->add_option("--topo", ret.topo, "Topology JSON");
  ret_cmd->add_option("--source", ret.source, "cls or patch_mean");
  ret_cmd->add_option("--encoder", ret.encoder, "teacher or student");
  ret_cmd->add_option("--k", ret.k, "Neighbours")->check(CLI::PositiveNumber);
  ret_cmd->add_flag("--force", ret.force, "Ignore model configuration mismatch");
  ret_cmd->add_flag("--json", ret.json_out, "Machine-readable output");

  FlopsArgs flops;
  auto* flops_cmd = app.add_subcommand("flops", "Analytic encoder cost report");
  add_common(flops_cmd, common);
  flops_cmd->add_option("--tokens", flops.tokens, "Token counts (cls included); ratios use the first")
      ->delimiter(',');
  flops_cmd->add_flag("--json", flops.json_out, "Machine-readable output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*gen_cmd) return run_gen_data(common, gen);
    if (*aug_cmd) return run_augment(common, aug);
    if (*mask_cmd) return run_mask(common, mask);
    if (*pre_cmd) return run_pretrain(common, pre);
    if (*probe_cmd) return run_probe(common, probe_args);
    if (*ret_cmd) return run_retrieve(common, ret);
    if (*flops_cmd) return run_flops(common, flops);
  } catch (const slim::IoError& e) {
    log(Level::Error, e.what());
    return 2;
  } catch (const std::exception& e) {
    log(Level::Error, e.what());
    return 1;
  }
  return 1;
}

#include <gtest/gtest.h>

#include <fstream>
#include <iterator>
#include <json.hpp>

#include "slim/checkpoint.hpp"
#include "slim/error.hpp"
#include "test_util.hpp"

namespace slim {
namespace {

using testing::scratch_dir;

std::vector<std::uint8_t> file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

SlimConfig ckpt_config() {
  SlimConfig cfg = SlimConfig::tiny();
  cfg.model.layers = 1;
  cfg.train.seed = 21;
  return cfg;
}

TrainState trained_state(const SlimConfig& cfg) {
  TrainState s = init_train_state(cfg);
  Rng rng(9);
  for (auto& r : param_refs(s.adam.m))
    for (Eigen::Index i = 0; i < r.value->size(); ++i) r.value->data()[i] = static_cast<float>(rng.normal());
  for (auto& r : param_refs(s.adam.v))
    for (Eigen::Index i = 0; i < r.value->size(); ++i) r.value->data()[i] = static_cast<float>(rng.uniform());
  for (auto& r : param_refs(s.teacher)) r.value->array() += 0.5f;
  s.adam.step = 7;
  s.step = 7;
  for (int i = 0; i < 13; ++i) s.rng.next_u64();
  return s;
}

TEST(Checkpoint, SaveLoadSaveIsByteIdentical) {
  const auto cfg = ckpt_config();
  const auto dir = scratch_dir("ckpt_rt");
  auto state = trained_state(cfg);
  save_checkpoint(state, cfg, dir / "a.ckpt");
  const auto loaded = load_checkpoint(dir / "a.ckpt", &cfg.model);
  save_checkpoint(loaded.state, loaded.config, dir / "b.ckpt");
  EXPECT_EQ(file_bytes(dir / "a.ckpt"), file_bytes(dir / "b.ckpt"));
  EXPECT_EQ(loaded.state.step, 7);
  EXPECT_EQ(loaded.state.adam.step, 7);
  EXPECT_TRUE(loaded.state.rng == state.rng);
  EXPECT_EQ(loaded.state.config_hash, model_config_hash(cfg.model));
  EXPECT_EQ(config_to_json(loaded.config), config_to_json(cfg));
  auto a = param_refs(state.teacher);
  auto b = param_refs(const_cast<ModelParams<float>&>(loaded.state.teacher));
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_TRUE(*a[i].value == *b[i].value) << a[i].name;
  EXPECT_FALSE(std::filesystem::exists(dir / "a.ckpt.tmp"));
}

TEST(Checkpoint, LayoutHeader) {
  const auto cfg = ckpt_config();
  const auto bytes = encode_checkpoint(trained_state(cfg), cfg);
  ASSERT_GT(bytes.size(), 24u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 8), "SLIMCKPT");
  EXPECT_EQ(bytes[8], 1);
  std::uint64_t len = 0;
  for (int i = 0; i < 8; ++i) len |= static_cast<std::uint64_t>(bytes[12 + i]) << (8 * i);
  const auto manifest = nlohmann::json::parse(bytes.begin() + 20, bytes.begin() + 20 + len);
  EXPECT_EQ(manifest.at("step"), 7);
  EXPECT_TRUE(manifest.contains("config_hash"));
}

TEST(Checkpoint, TamperedPayloadIsChecksumError) {
  const auto cfg = ckpt_config();
  auto bytes = encode_checkpoint(trained_state(cfg), cfg);
  for (std::size_t pos : {bytes.size() / 2, bytes.size() - 10, std::size_t{30}}) {
    auto t = bytes;
    t[pos] ^= 0x01;
    EXPECT_THROW(decode_checkpoint(t), ChecksumError) << pos;
  }
  auto truncated = bytes;
  truncated.resize(bytes.size() - 100);
  EXPECT_THROW(decode_checkpoint(truncated), Error);
  auto magic = bytes;
  magic[0] = 'X';
  EXPECT_THROW(decode_checkpoint(magic), FormatError);
}

TEST(Checkpoint, ConfigHashMismatch) {
  const auto cfg = ckpt_config();
  const auto bytes = encode_checkpoint(trained_state(cfg), cfg);
  ModelConfig other = cfg.model;
  other.layers = 2;
  EXPECT_THROW(decode_checkpoint(bytes, &other), ConfigHashError);
  EXPECT_NO_THROW(decode_checkpoint(bytes, &other, true));
  EXPECT_NO_THROW(decode_checkpoint(bytes, &cfg.model));
}

TEST(Checkpoint, MissingFileIsIoError) {
  EXPECT_THROW(load_checkpoint("/nonexistent_dir_xyz/a.ckpt"), IoError);
  const auto cfg = ckpt_config();
  EXPECT_THROW(save_checkpoint(init_train_state(cfg), cfg, "/nonexistent_dir_xyz/a.ckpt"), IoError);
}

TEST(ConfigHash, IsFnv1aOfCanonicalModelJson) {
  const ModelConfig m = ModelConfig::tiny();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : model_config_json(m)) {
    h ^= c;
    h *= 1099511628211ull;
  }
  EXPECT_EQ(model_config_hash(m), h);
  ModelConfig other = m;
  other.prototypes = 128;
  EXPECT_NE(model_config_hash(other), h);
}

TEST(Config, ParseOverridesAndRejectsUnknownKeys) {
  const auto cfg = parse_config(R"({"profile": "tiny", "train": {"epochs": 5, "warmup_epochs": 1},
                                   "model": {"layers": 3}, "mask": {"strategy": "independent"}})");
  EXPECT_EQ(cfg.train.epochs, 5);
  EXPECT_EQ(cfg.model.layers, 3);
  EXPECT_EQ(cfg.model.dim, 32);
  EXPECT_EQ(cfg.mask.strategy, MaskStrategy::Independent);
  EXPECT_THROW(parse_config(R"({"train": {"epoch": 5}})"), Error);
  EXPECT_THROW(parse_config(R"({"trainer": {}})"), Error);
  EXPECT_THROW(parse_config(R"({"model": {"dim": 30}})"), ValidationError);
  EXPECT_THROW(parse_config("{not json"), FormatError);
}

TEST(Config, RoundTripsThroughJson) {
  for (const auto* name : {"tiny", "paper"}) {
    const auto cfg = SlimConfig::profile_named(name);
    const auto back = parse_config(config_to_json(cfg));
    EXPECT_EQ(config_to_json(back), config_to_json(cfg)) << name;
  }
  EXPECT_EQ(SlimConfig::paper().model.prototypes, 65536);
  EXPECT_EQ(SlimConfig::paper().train.batch_size, 768);
  EXPECT_THROW(SlimConfig::profile_named("huge"), ValidationError);
}

TEST(Config, ShippedFilesParse) {
  const auto dir = std::filesystem::path(SLIM_SCHEMA_DIR).parent_path() / "configs";
  EXPECT_EQ(config_to_json(load_config(dir / "tiny.json")), config_to_json(SlimConfig::tiny()));
  EXPECT_EQ(config_to_json(load_config(dir / "paper.json")), config_to_json(SlimConfig::paper()));
}

}  // namespace
}  // namespace slim

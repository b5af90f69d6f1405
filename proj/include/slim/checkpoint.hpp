#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "slim/config.hpp"
#include "slim/train.hpp"

namespace slim {

struct CheckpointData {
  TrainState state;
  SlimConfig config;
};

// Container layout (little-endian):
//   "SLIMCKPT" | u32 version | u64 manifest length | manifest JSON
//   | u32 blob count | blobs | u32 crc32 of all preceding bytes
// Each blob: u16 name length | name | u32 rows | u32 cols | float32 data.
std::vector<std::uint8_t> encode_checkpoint(const TrainState& state, const SlimConfig& cfg);
CheckpointData decode_checkpoint(const std::vector<std::uint8_t>& bytes,
                                 const ModelConfig* expected = nullptr, bool force = false);

void save_checkpoint(const TrainState& state, const SlimConfig& cfg,
                     const std::filesystem::path& path);
// Throws ChecksumError on corruption and ConfigHashError when `expected`
// is given and differs from the stored model configuration (unless force).
CheckpointData load_checkpoint(const std::filesystem::path& path,
                               const ModelConfig* expected = nullptr, bool force = false);

}  // namespace slim

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace slim {

// T x J x 3 joint coordinates in meters, stored (t, j, c) row-major.
// Channel order is (x, y, z): lateral, vertical, depth.
//
// Coordinates are held in double precision. The SKEL file stores float32,
// so a save/load round trip is exact for float32-representable values, which
// is what load_sequence and gen_synthetic produce.
struct SkeletonSequence {
  int frames = 0;
  int joints = 0;
  std::vector<double> coords;

  SkeletonSequence() = default;
  SkeletonSequence(int frames, int joints)
      : frames(frames), joints(joints),
        coords(static_cast<std::size_t>(frames) * joints * 3, 0.0) {}

  double& at(int t, int j, int c) { return coords[index(t, j, c)]; }
  double at(int t, int j, int c) const { return coords[index(t, j, c)]; }

  std::size_t index(int t, int j, int c) const {
    return (static_cast<std::size_t>(t) * joints + j) * 3 + c;
  }

  // Throws ValidationError if T or J is non-positive, the buffer size does
  // not match, or any coordinate is non-finite.
  void validate() const;

  bool operator==(const SkeletonSequence&) const = default;
};

struct JointGroup {
  std::string name;
  std::vector<int> joints;  // skeletal chain order
};

struct SkeletonTopology {
  int num_joints = 0;
  std::vector<int> parents;  // root is its own parent
  std::vector<JointGroup> groups;
  std::vector<std::pair<int, int>> swap_pairs;  // 0-indexed (left, right)
  int lateral_axis = 0;
  int vertical_axis = 1;
  // Optional rest-pose bone offsets (child minus parent), used only by the
  // synthetic generator. Empty means "derive a procedural rest pose".
  std::vector<std::array<double, 3>> rest_offsets;

  // Checks tree structure, group partition and chain order, and swap-pair
  // involution consistency with the groups and the tree.
  void validate() const;

  int root() const;
  // Parents always precede children.
  std::vector<int> topological_order() const;
  // sigma(j): the mirrored joint index (identity on central joints).
  std::vector<int> swap_permutation() const;
  // Index into `groups` for every joint.
  std::vector<int> group_of_joint() const;
  int max_group_size() const;
};

struct BoneSequence {
  int frames = 0;
  int joints = 0;
  std::vector<double> bones;            // T x J x 3
  std::vector<double> root_trajectory;  // T x 3

  double& bone(int t, int j, int c) {
    return bones[(static_cast<std::size_t>(t) * joints + j) * 3 + c];
  }
  double bone(int t, int j, int c) const {
    return bones[(static_cast<std::size_t>(t) * joints + j) * 3 + c];
  }
};

struct LabeledItem {
  SkeletonSequence sequence;
  int label = 0;
};

struct LabeledDataset {
  std::vector<LabeledItem> items;
  int num_classes = 0;
  SkeletonTopology topology;

  void validate() const;
};

// SKEL binary format.
SkeletonSequence load_sequence(const std::filesystem::path& path);
void save_sequence(const SkeletonSequence& seq, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_sequence(const SkeletonSequence& seq);
SkeletonSequence decode_sequence(const std::vector<std::uint8_t>& bytes);

SkeletonTopology load_topology(const std::filesystem::path& path);
SkeletonTopology parse_topology(const std::string& json_text);
std::string topology_to_json(const SkeletonTopology& topo);

BoneSequence joints_to_bones(const SkeletonSequence& seq, const SkeletonTopology& topo);
SkeletonSequence bones_to_joints(const BoneSequence& bones, const SkeletonTopology& topo);

// Linear interpolation onto target_T frames with inclusive endpoints.
SkeletonSequence resample_linear(const SkeletonSequence& seq, int target_T);

struct GeneratorConfig {
  int num_classes = 4;
  int sequences_per_class = 10;
  int frames = 64;
  double noise_std = 0.0;
  // Per-sequence nuisance variation. All zero means every sequence of a
  // class is identical up to the additive noise.
  double yaw_jitter_deg = 0.0;
  double phase_jitter = 0.0;  // radians, shared by all groups of a sequence
  double scale_jitter = 0.0;  // body scale 1 +/- scale_jitter
  double speed_jitter = 0.0;  // frequency multiplier 1 +/- speed_jitter
  double tilt_jitter_deg = 0.0;    // rotation about the lateral axis
  double bone_scale_jitter = 0.0;  // per-group bone length factor 1 +/- jitter
  double mirror_prob = 0.0;        // probability of a left/right swapped performer
};

LabeledDataset gen_synthetic(const GeneratorConfig& cfg, const SkeletonTopology& topo,
                             std::uint64_t seed);

// Per-class split: the last test_per_class items of every class go to the
// second dataset, in their original order.
std::pair<LabeledDataset, LabeledDataset> split_per_class(const LabeledDataset& ds,
                                                          int test_per_class);

// Dataset index: one JSON object {"path": ..., "label": ...} per line, paths
// relative to the index file's directory.
void save_dataset(const LabeledDataset& ds, const std::filesystem::path& dir);
LabeledDataset load_dataset(const std::filesystem::path& index_path,
                            const SkeletonTopology& topo, int num_classes = 0);

}  // namespace slim

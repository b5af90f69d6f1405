#include "slim/skeldata.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <set>
#include <sstream>

#include "json.hpp"
#include "slim/error.hpp"
#include "slim/rng.hpp"

namespace slim {
namespace {

constexpr std::array<std::uint8_t, 4> kSkelMagic = {0x53, 0x4B, 0x45, 0x4C};
constexpr std::uint8_t kSkelVersion = 1;
constexpr std::size_t kSkelHeaderBytes = 4 + 1 + 3 * 4;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

Eigen::Vector3d offset_vec(const std::array<double, 3>& a) { return {a[0], a[1], a[2]}; }

// Fallback rest pose for topologies that ship without offsets: each group
// fans out in its own direction in the x-y plane with 10 cm bones.
std::vector<Eigen::Vector3d> rest_pose_offsets(const SkeletonTopology& topo) {
  std::vector<Eigen::Vector3d> offsets(topo.num_joints, Eigen::Vector3d::Zero());
  if (!topo.rest_offsets.empty()) {
    for (int j = 0; j < topo.num_joints; ++j) offsets[j] = offset_vec(topo.rest_offsets[j]);
    return offsets;
  }
  const auto group_of = topo.group_of_joint();
  const double n_groups = static_cast<double>(topo.groups.size());
  for (int j = 0; j < topo.num_joints; ++j) {
    if (j == topo.root()) continue;
    const double angle = 2.0 * std::numbers::pi * group_of[j] / n_groups + 0.5 * std::numbers::pi;
    offsets[j] = 0.1 * Eigen::Vector3d(std::cos(angle), std::sin(angle), 0.0);
  }
  return offsets;
}

struct GroupMotion {
  double frequency = 1.0;  // cycles per sequence
  double amplitude = 0.5;  // radians
  double phase = 0.0;
};

}  // namespace

void SkeletonSequence::validate() const {
  if (frames < 1 || joints < 1)
    throw ValidationError("sequence must have T >= 1 and J >= 1");
  if (coords.size() != static_cast<std::size_t>(frames) * joints * 3)
    throw ValidationError("coordinate buffer does not match T x J x 3");
  for (double v : coords)
    if (!std::isfinite(v)) throw ValidationError("non-finite coordinate");
}

std::vector<std::uint8_t> encode_sequence(const SkeletonSequence& seq) {
  seq.validate();
  std::vector<std::uint8_t> out;
  out.reserve(kSkelHeaderBytes + seq.coords.size() * 4);
  out.insert(out.end(), kSkelMagic.begin(), kSkelMagic.end());
  out.push_back(kSkelVersion);
  put_u32(out, static_cast<std::uint32_t>(seq.frames));
  put_u32(out, static_cast<std::uint32_t>(seq.joints));
  put_u32(out, 3);
  for (double v : seq.coords) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  return out;
}

SkeletonSequence decode_sequence(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kSkelHeaderBytes) throw LengthError("SKEL header truncated");
  if (!std::equal(kSkelMagic.begin(), kSkelMagic.end(), bytes.begin()))
    throw FormatError("bad SKEL magic");
  if (bytes[4] != kSkelVersion) throw FormatError("unsupported SKEL version");
  const std::uint32_t frames = get_u32(&bytes[5]);
  const std::uint32_t joints = get_u32(&bytes[9]);
  const std::uint32_t channels = get_u32(&bytes[13]);
  if (channels != 3) throw FormatError("SKEL channel count must be 3");
  if (frames == 0 || joints == 0) throw ValidationError("SKEL with zero frames or joints");
  const std::uint64_t count = static_cast<std::uint64_t>(frames) * joints * channels;
  if (bytes.size() - kSkelHeaderBytes != count * 4)
    throw LengthError("SKEL payload has " + std::to_string(bytes.size() - kSkelHeaderBytes) +
                      " bytes, header implies " + std::to_string(count * 4));
  SkeletonSequence seq(static_cast<int>(frames), static_cast<int>(joints));
  const std::uint8_t* p = bytes.data() + kSkelHeaderBytes;
  for (std::uint64_t i = 0; i < count; ++i, p += 4)
    seq.coords[i] = static_cast<double>(std::bit_cast<float>(get_u32(p)));
  seq.validate();
  return seq;
}

SkeletonSequence load_sequence(const std::filesystem::path& path) {
  return decode_sequence(read_file(path));
}

void save_sequence(const SkeletonSequence& seq, const std::filesystem::path& path) {
  write_file(path, encode_sequence(seq));
}

// --- topology ---------------------------------------------------------------

int SkeletonTopology::root() const {
  for (int j = 0; j < num_joints; ++j)
    if (parents[j] == j) return j;
  throw ValidationError("topology has no root");
}

std::vector<int> SkeletonTopology::topological_order() const {
  std::vector<std::vector<int>> children(num_joints);
  const int r = root();
  for (int j = 0; j < num_joints; ++j)
    if (j != r) children[parents[j]].push_back(j);
  std::vector<int> order{r};
  for (std::size_t i = 0; i < order.size(); ++i)
    for (int c : children[order[i]]) order.push_back(c);
  if (static_cast<int>(order.size()) != num_joints)
    throw ValidationError("parent mapping is not a single tree");
  return order;
}

std::vector<int> SkeletonTopology::swap_permutation() const {
  std::vector<int> sigma(num_joints);
  for (int j = 0; j < num_joints; ++j) sigma[j] = j;
  for (auto [l, r] : swap_pairs) {
    sigma[l] = r;
    sigma[r] = l;
  }
  return sigma;
}

std::vector<int> SkeletonTopology::group_of_joint() const {
  std::vector<int> owner(num_joints, -1);
  for (std::size_t g = 0; g < groups.size(); ++g)
    for (int j : groups[g].joints) owner[j] = static_cast<int>(g);
  return owner;
}

int SkeletonTopology::max_group_size() const {
  std::size_t m = 0;
  for (const auto& g : groups) m = std::max(m, g.joints.size());
  return static_cast<int>(m);
}

void SkeletonTopology::validate() const {
  if (num_joints < 1) throw ValidationError("topology needs at least one joint");
  if (static_cast<int>(parents.size()) != num_joints)
    throw ValidationError("parents length does not match num_joints");
  int roots = 0;
  for (int j = 0; j < num_joints; ++j) {
    if (parents[j] < 0 || parents[j] >= num_joints)
      throw ValidationError("parent index out of range at joint " + std::to_string(j));
    if (parents[j] == j) ++roots;
  }
  if (roots != 1) throw ValidationError("topology must have exactly one root");
  for (int j = 0; j < num_joints; ++j) {
    int cur = j;
    for (int steps = 0; parents[cur] != cur; ++steps) {
      if (steps > num_joints) throw ValidationError("parent cycle through joint " + std::to_string(j));
      cur = parents[cur];
    }
  }

  std::vector<int> seen(num_joints, 0);
  for (const auto& g : groups) {
    if (g.joints.empty()) throw ValidationError("empty joint group '" + g.name + "'");
    for (int j : g.joints) {
      if (j < 0 || j >= num_joints) throw ValidationError("group joint out of range in '" + g.name + "'");
      if (seen[j]++) throw ValidationError("joint " + std::to_string(j) + " appears in two groups");
    }
    // Consecutive entries must be skeletally adjacent: parent/child, or
    // siblings (e.g. hand tip and thumb hanging off the same hand joint).
    for (std::size_t k = 1; k < g.joints.size(); ++k) {
      const int a = g.joints[k - 1];
      const int b = g.joints[k];
      const bool adjacent = parents[b] == a || parents[a] == b ||
                            (parents[a] == parents[b] && parents[a] != a && parents[b] != b);
      if (!adjacent)
        throw ValidationError("group '" + g.name + "' is not in chain order at joints " +
                              std::to_string(a) + "," + std::to_string(b));
    }
  }
  for (int j = 0; j < num_joints; ++j)
    if (!seen[j]) throw ValidationError("joint " + std::to_string(j) + " is in no group");

  std::vector<int> used(num_joints, 0);
  for (auto [l, r] : swap_pairs) {
    if (l < 0 || r < 0 || l >= num_joints || r >= num_joints)
      throw ValidationError("swap pair index out of range");
    if (l == r) throw ValidationError("swap pair maps a joint to itself");
    if (used[l]++ || used[r]++) throw ValidationError("joint reused across swap pairs");
  }
  const auto sigma = swap_permutation();
  for (int j = 0; j < num_joints; ++j)
    if (parents[sigma[j]] != sigma[parents[j]])
      throw ValidationError("swap pairs do not respect the parent tree at joint " + std::to_string(j));
  for (const auto& g : groups) {
    std::vector<int> image;
    for (int j : g.joints) image.push_back(sigma[j]);
    const bool matches = std::any_of(groups.begin(), groups.end(),
                                     [&](const JointGroup& h) { return h.joints == image; });
    if (!matches)
      throw ValidationError("swap pairs do not map group '" + g.name + "' onto a group");
  }

  if (lateral_axis < 0 || lateral_axis > 2 || vertical_axis < 0 || vertical_axis > 2 ||
      lateral_axis == vertical_axis)
    throw ValidationError("invalid axis convention");
  if (!rest_offsets.empty() && static_cast<int>(rest_offsets.size()) != num_joints)
    throw ValidationError("rest_offsets length does not match num_joints");
}

SkeletonTopology parse_topology(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("topology JSON: ") + e.what());
  }
  SkeletonTopology topo;
  try {
    topo.num_joints = j.at("num_joints").get<int>();
    topo.parents = j.at("parents").get<std::vector<int>>();
    for (const auto& g : j.at("groups"))
      topo.groups.push_back({g.at("name").get<std::string>(), g.at("joints").get<std::vector<int>>()});
    for (const auto& p : j.at("swap_pairs")) {
      if (p.size() != 2) throw FormatError("swap pair must have two entries");
      topo.swap_pairs.emplace_back(p[0].get<int>(), p[1].get<int>());
    }
    topo.lateral_axis = j.value("lateral_axis", 0);
    topo.vertical_axis = j.value("vertical_axis", 1);
    if (j.contains("rest_offsets"))
      topo.rest_offsets = j.at("rest_offsets").get<std::vector<std::array<double, 3>>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("topology JSON: ") + e.what());
  }
  topo.validate();
  return topo;
}

SkeletonTopology load_topology(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open topology " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_topology(ss.str());
}

std::string topology_to_json(const SkeletonTopology& topo) {
  nlohmann::json j;
  j["num_joints"] = topo.num_joints;
  j["parents"] = topo.parents;
  j["groups"] = nlohmann::json::array();
  for (const auto& g : topo.groups) j["groups"].push_back({{"name", g.name}, {"joints", g.joints}});
  j["swap_pairs"] = nlohmann::json::array();
  for (auto [l, r] : topo.swap_pairs) j["swap_pairs"].push_back({l, r});
  j["lateral_axis"] = topo.lateral_axis;
  j["vertical_axis"] = topo.vertical_axis;
  if (!topo.rest_offsets.empty()) j["rest_offsets"] = topo.rest_offsets;
  return j.dump(2);
}

// --- bones ------------------------------------------------------------------

BoneSequence joints_to_bones(const SkeletonSequence& seq, const SkeletonTopology& topo) {
  if (seq.joints != topo.num_joints)
    throw ValidationError("sequence has " + std::to_string(seq.joints) + " joints, topology " +
                          std::to_string(topo.num_joints));
  const int root = topo.root();
  BoneSequence out;
  out.frames = seq.frames;
  out.joints = seq.joints;
  out.bones.assign(seq.coords.size(), 0.0);
  out.root_trajectory.assign(static_cast<std::size_t>(seq.frames) * 3, 0.0);
  for (int t = 0; t < seq.frames; ++t) {
    for (int c = 0; c < 3; ++c) out.root_trajectory[t * 3 + c] = seq.at(t, root, c);
    for (int j = 0; j < seq.joints; ++j) {
      if (j == root) continue;
      for (int c = 0; c < 3; ++c) out.bone(t, j, c) = seq.at(t, j, c) - seq.at(t, topo.parents[j], c);
    }
  }
  return out;
}

SkeletonSequence bones_to_joints(const BoneSequence& bones, const SkeletonTopology& topo) {
  if (bones.joints != topo.num_joints || bones.frames < 1 ||
      bones.bones.size() != static_cast<std::size_t>(bones.frames) * bones.joints * 3 ||
      bones.root_trajectory.size() != static_cast<std::size_t>(bones.frames) * 3)
    throw ValidationError("bone sequence shape does not match topology");
  const auto order = topo.topological_order();
  const int root = order.front();
  SkeletonSequence seq(bones.frames, bones.joints);
  for (int t = 0; t < bones.frames; ++t) {
    for (int c = 0; c < 3; ++c) seq.at(t, root, c) = bones.root_trajectory[t * 3 + c];
    for (std::size_t k = 1; k < order.size(); ++k) {
      const int j = order[k];
      for (int c = 0; c < 3; ++c) seq.at(t, j, c) = seq.at(t, topo.parents[j], c) + bones.bone(t, j, c);
    }
  }
  return seq;
}

// --- resampling ---------------------------------------------------------------

SkeletonSequence resample_linear(const SkeletonSequence& seq, int target_T) {
  if (target_T < 1) throw ValidationError("resample target must be >= 1 frames");
  if (seq.frames < 1) throw ValidationError("cannot resample an empty sequence");
  SkeletonSequence out(target_T, seq.joints);
  const std::size_t frame_size = static_cast<std::size_t>(seq.joints) * 3;
  for (int k = 0; k < target_T; ++k) {
    const double p = target_T == 1 ? 0.0
                                   : static_cast<double>(k) * (seq.frames - 1) / (target_T - 1);
    const int i0 = std::min(static_cast<int>(std::floor(p)), seq.frames - 1);
    const int i1 = std::min(i0 + 1, seq.frames - 1);
    const double f = p - i0;
    const double* a = &seq.coords[i0 * frame_size];
    const double* b = &seq.coords[i1 * frame_size];
    double* dst = &out.coords[k * frame_size];
    if (f == 0.0) {
      std::copy(a, a + frame_size, dst);
    } else {
      for (std::size_t i = 0; i < frame_size; ++i) dst[i] = (1.0 - f) * a[i] + f * b[i];
    }
  }
  return out;
}

// --- synthetic data -------------------------------------------------------------

LabeledDataset gen_synthetic(const GeneratorConfig& cfg, const SkeletonTopology& topo,
                             std::uint64_t seed) {
  if (cfg.num_classes < 2) throw ValidationError("gen_synthetic needs at least 2 classes");
  if (cfg.sequences_per_class < 1 || cfg.frames < 2)
    throw ValidationError("gen_synthetic needs >= 1 sequence per class and >= 2 frames");
  if (cfg.noise_std < 0.0) throw ValidationError("noise_std must be non-negative");
  if (cfg.yaw_jitter_deg < 0.0 || cfg.phase_jitter < 0.0 || cfg.scale_jitter < 0.0 || cfg.speed_jitter < 0.0 ||
      cfg.tilt_jitter_deg < 0.0 || cfg.bone_scale_jitter < 0.0)
    throw ValidationError("generator jitter values must be non-negative");
  if (cfg.scale_jitter >= 1.0 || cfg.bone_scale_jitter >= 1.0 || cfg.speed_jitter >= 1.0)
    throw ValidationError("scale and speed jitter must be below 1");
  if (!(cfg.mirror_prob >= 0.0 && cfg.mirror_prob <= 1.0))
    throw ValidationError("mirror_prob must lie in [0, 1]");
  topo.validate();

  Rng class_rng = Rng::derive(seed, {0xC1A55});
  const std::size_t n_groups = topo.groups.size();

  // Classes are separated by their frequency tuples: every pair differs by
  // at least min_gap cycles in some group.
  constexpr double kMinGap = 0.5;
  std::vector<std::vector<GroupMotion>> classes;
  for (int c = 0; c < cfg.num_classes; ++c) {
    for (int attempt = 0;; ++attempt) {
      std::vector<GroupMotion> motion(n_groups);
      for (auto& m : motion) {
        m.frequency = class_rng.uniform(0.5, 3.5);
        m.amplitude = class_rng.uniform(0.3, 0.9);
        m.phase = class_rng.uniform(0.0, 2.0 * std::numbers::pi);
      }
      const bool distinct = std::all_of(classes.begin(), classes.end(), [&](const auto& other) {
        double gap = 0.0;
        for (std::size_t g = 0; g < n_groups; ++g)
          gap = std::max(gap, std::abs(other[g].frequency - motion[g].frequency));
        return gap >= kMinGap;
      });
      if (distinct || attempt > 1000) {
        classes.push_back(std::move(motion));
        break;
      }
    }
  }

  const auto rest = rest_pose_offsets(topo);
  const auto group_of = topo.group_of_joint();
  const int root = topo.root();
  std::vector<int> chain_pos(topo.num_joints, 0);
  for (const auto& g : topo.groups)
    for (std::size_t k = 0; k < g.joints.size(); ++k) chain_pos[g.joints[k]] = static_cast<int>(k);

  // Each group swings about an axis perpendicular to its mean rest direction
  // and the depth axis.
  const int depth_axis = 3 - topo.lateral_axis - topo.vertical_axis;
  std::vector<Eigen::Vector3d> axes(n_groups);
  for (std::size_t g = 0; g < n_groups; ++g) {
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (int j : topo.groups[g].joints) mean += rest[j];
    Eigen::Vector3d depth = Eigen::Vector3d::Zero();
    depth[depth_axis] = 1.0;
    Eigen::Vector3d axis = mean.cross(depth);
    if (axis.norm() < 1e-9) {
      axis = Eigen::Vector3d::Zero();
      axis[topo.lateral_axis] = 1.0;
    }
    axes[g] = axis.normalized();
  }
  Eigen::Vector3d vertical = Eigen::Vector3d::Zero();
  vertical[topo.vertical_axis] = 1.0;

  LabeledDataset ds;
  ds.num_classes = cfg.num_classes;
  ds.topology = topo;
  for (int c = 0; c < cfg.num_classes; ++c) {
    for (int s = 0; s < cfg.sequences_per_class; ++s) {
      Rng rng = Rng::derive(seed, {static_cast<std::uint64_t>(c), static_cast<std::uint64_t>(s)});
      const double scale = 1.0 + rng.uniform(-cfg.scale_jitter, cfg.scale_jitter);
      const double yaw = rng.uniform(-cfg.yaw_jitter_deg, cfg.yaw_jitter_deg) * std::numbers::pi / 180.0;
      const double shift = rng.uniform(-cfg.phase_jitter, cfg.phase_jitter);
      const double speed = 1.0 + rng.uniform(-cfg.speed_jitter, cfg.speed_jitter);
      // Drawn from a separate stream so the draws above do not depend on
      // which of these knobs are enabled.
      Rng extra = Rng::derive(seed, {static_cast<std::uint64_t>(c), static_cast<std::uint64_t>(s), 0xE7A});
      Eigen::Vector3d lateral = Eigen::Vector3d::Zero();
      lateral[topo.lateral_axis] = 1.0;
      const double tilt = extra.uniform(-cfg.tilt_jitter_deg, cfg.tilt_jitter_deg) * std::numbers::pi / 180.0;
      std::vector<double> group_scale(n_groups, 1.0);
      for (auto& f : group_scale) f = 1.0 + extra.uniform(-cfg.bone_scale_jitter, cfg.bone_scale_jitter);
      const bool mirrored = extra.bernoulli(cfg.mirror_prob);
      const Eigen::Matrix3d yaw_rot = (Eigen::AngleAxisd(yaw, vertical) * Eigen::AngleAxisd(tilt, lateral)).toRotationMatrix();

      BoneSequence bones;
      bones.frames = cfg.frames;
      bones.joints = topo.num_joints;
      bones.bones.assign(static_cast<std::size_t>(cfg.frames) * topo.num_joints * 3, 0.0);
      bones.root_trajectory.assign(static_cast<std::size_t>(cfg.frames) * 3, 0.0);
      for (int t = 0; t < cfg.frames; ++t) {
        const double u = static_cast<double>(t) / (cfg.frames - 1);
        for (int j = 0; j < topo.num_joints; ++j) {
          if (j == root) continue;
          const GroupMotion& m = classes[c][group_of[j]];
          const double angle = m.amplitude * (1.0 + 0.3 * chain_pos[j]) *
                               std::sin(2.0 * std::numbers::pi * m.frequency * speed * u + m.phase + shift);
          const Eigen::Vector3d b =
              yaw_rot * (Eigen::AngleAxisd(angle, axes[group_of[j]]) * (scale * group_scale[group_of[j]] * rest[j]));
          for (int k = 0; k < 3; ++k) bones.bone(t, j, k) = b[k];
        }
      }
      SkeletonSequence seq = bones_to_joints(bones, topo);
      if (mirrored) {
        const auto sigma = topo.swap_permutation();
        SkeletonSequence swapped(seq.frames, seq.joints);
        for (int t = 0; t < seq.frames; ++t)
          for (int j = 0; j < seq.joints; ++j)
            for (int k = 0; k < 3; ++k)
              swapped.at(t, sigma[j], k) = (k == topo.lateral_axis ? -1.0 : 1.0) * seq.at(t, j, k);
        seq = std::move(swapped);
      }
      for (double& v : seq.coords) {
        if (cfg.noise_std > 0.0) v += cfg.noise_std * rng.normal();
        v = static_cast<double>(static_cast<float>(v));
      }
      ds.items.push_back({std::move(seq), c});
    }
  }
  return ds;
}

std::pair<LabeledDataset, LabeledDataset> split_per_class(const LabeledDataset& ds,
                                                          int test_per_class) {
  if (test_per_class < 0) throw ValidationError("test_per_class must be >= 0");
  std::vector<int> per_class(ds.num_classes, 0), seen(ds.num_classes, 0);
  for (const auto& it : ds.items) {
    if (it.label < 0 || it.label >= ds.num_classes) throw ValidationError("label out of range");
    ++per_class[it.label];
  }
  std::pair<LabeledDataset, LabeledDataset> out;
  for (auto* d : {&out.first, &out.second}) {
    d->num_classes = ds.num_classes;
    d->topology = ds.topology;
  }
  for (const auto& it : ds.items) {
    const bool test = seen[it.label]++ >= per_class[it.label] - test_per_class;
    (test ? out.second : out.first).items.push_back(it);
  }
  return out;
}

void LabeledDataset::validate() const {
  if (num_classes < 1) throw ValidationError("dataset needs num_classes >= 1");
  for (const auto& item : items) {
    if (item.label < 0 || item.label >= num_classes)
      throw ValidationError("label " + std::to_string(item.label) + " out of range");
    if (item.sequence.joints != topology.num_joints)
      throw ValidationError("sequence joint count does not match topology");
  }
}

void save_dataset(const LabeledDataset& ds, const std::filesystem::path& dir) {
  ds.validate();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  std::ofstream index(dir / "index.jsonl", std::ios::trunc);
  if (!index) throw IoError("cannot write dataset index in " + dir.string());
  for (std::size_t i = 0; i < ds.items.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "seq_%06zu.skel", i);
    save_sequence(ds.items[i].sequence, dir / name);
    nlohmann::json rec{{"path", name}, {"label", ds.items[i].label}};
    index << rec.dump() << '\n';
  }
  if (!index) throw IoError("failed writing dataset index");
}

LabeledDataset load_dataset(const std::filesystem::path& index_path, const SkeletonTopology& topo,
                            int num_classes) {
  std::ifstream in(index_path);
  if (!in) throw IoError("cannot open dataset index " + index_path.string());
  LabeledDataset ds;
  ds.topology = topo;
  const auto base = index_path.parent_path();
  std::string line;
  int max_label = -1;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
      LabeledItem item;
      item.label = rec.at("label").get<int>();
      std::filesystem::path p = rec.at("path").get<std::string>();
      item.sequence = load_sequence(p.is_absolute() ? p : base / p);
      max_label = std::max(max_label, item.label);
      ds.items.push_back(std::move(item));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("dataset index record: ") + e.what());
    }
  }
  ds.num_classes = num_classes > 0 ? num_classes : max_label + 1;
  ds.validate();
  return ds;
}

}  // namespace slim

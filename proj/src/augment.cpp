#include "slim/augment.hpp"

#include <cmath>
#include <numbers>

#include "slim/error.hpp"

namespace slim {
namespace {

double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

Mat3 matmul(const Mat3& a, const Mat3& b) {
  Mat3 out{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) out[i][j] += a[i][k] * b[k][j];
  return out;
}

}  // namespace

void AugConfig::validate() const {
  if (p_apply < 0.0 || p_apply > 1.0) throw ValidationError("p_apply must be in [0, 1]");
  if (theta_tilt_deg < 0.0 || theta_vert_deg < 0.0)
    throw ValidationError("rotation bounds must be non-negative");
  if (!(scale_lo > 0.0 && scale_lo <= scale_hi))
    throw ValidationError("scale bounds must satisfy 0 < lo <= hi");
}

Mat3 rotation_matrix(const RotationAngles& a) {
  const double ca = std::cos(a.alpha), sa = std::sin(a.alpha);
  const double cb = std::cos(a.beta), sb = std::sin(a.beta);
  const double cg = std::cos(a.gamma), sg = std::sin(a.gamma);
  const Mat3 rx{{{1, 0, 0}, {0, ca, -sa}, {0, sa, ca}}};
  const Mat3 ry{{{cb, 0, sb}, {0, 1, 0}, {-sb, 0, cb}}};
  const Mat3 rz{{{cg, -sg, 0}, {sg, cg, 0}, {0, 0, 1}}};
  return matmul(rz, matmul(ry, rx));
}

SkeletonSequence rotate(const SkeletonSequence& seq, const RotationAngles& angles) {
  const Mat3 r = rotation_matrix(angles);
  SkeletonSequence out = seq;
  for (std::size_t p = 0; p < seq.coords.size(); p += 3) {
    const double x = seq.coords[p], y = seq.coords[p + 1], z = seq.coords[p + 2];
    for (int i = 0; i < 3; ++i) out.coords[p + i] = r[i][0] * x + r[i][1] * y + r[i][2] * z;
  }
  return out;
}

RotationAngles sample_rotation(const AugConfig& cfg, Rng& rng) {
  const double tilt = deg2rad(cfg.theta_tilt_deg);
  const double vert = deg2rad(cfg.theta_vert_deg);
  RotationAngles a;
  a.alpha = rng.uniform(-tilt, tilt);
  a.beta = rng.uniform(-vert, vert);
  a.gamma = rng.uniform(-tilt, tilt);
  return a;
}

SkeletonSequence mirror(const SkeletonSequence& seq, const SkeletonTopology& topo) {
  if (seq.joints != topo.num_joints) throw ValidationError("mirror: joint count mismatch");
  const std::vector<int> sigma = topo.swap_permutation();
  SkeletonSequence out(seq.frames, seq.joints);
  for (int t = 0; t < seq.frames; ++t)
    for (int j = 0; j < seq.joints; ++j)
      for (int c = 0; c < 3; ++c) {
        const double v = seq.at(t, sigma[j], c);
        out.at(t, j, c) = c == topo.lateral_axis ? -v : v;
      }
  return out;
}

SkeletonSequence scale_bones(const SkeletonSequence& seq, const SkeletonTopology& topo,
                             const std::vector<double>& factors) {
  if (factors.size() != topo.groups.size())
    throw ValidationError("scale_bones: need one factor per joint group");
  BoneSequence bones = joints_to_bones(seq, topo);
  const std::vector<int> owner = topo.group_of_joint();
  for (int t = 0; t < bones.frames; ++t)
    for (int j = 0; j < bones.joints; ++j)
      for (int c = 0; c < 3; ++c) bones.bone(t, j, c) *= factors[owner[j]];
  return bones_to_joints(bones, topo);
}

std::vector<double> sample_scale_factors(const SkeletonTopology& topo, const AugConfig& cfg,
                                         Rng& rng) {
  std::vector<double> f(topo.groups.size());
  for (double& v : f) v = rng.uniform(cfg.scale_lo, cfg.scale_hi);
  return f;
}

View apply_saa(const View& view, const SkeletonTopology& topo, const AugConfig& cfg, Rng& rng,
               SaaRecord* record) {
  cfg.validate();
  View out = view;
  SaaRecord rec;
  if (rng.bernoulli(cfg.p_apply)) {
    rec.rotated = true;
    rec.angles = sample_rotation(cfg, rng);
    out.sequence = rotate(out.sequence, rec.angles);
  }
  if (rng.bernoulli(cfg.p_apply)) {
    rec.mirrored = true;
    out.sequence = mirror(out.sequence, topo);
  }
  if (rng.bernoulli(cfg.p_apply)) {
    rec.scaled = true;
    rec.factors = sample_scale_factors(topo, cfg, rng);
    out.sequence = scale_bones(out.sequence, topo, rec.factors);
  }
  if (record) *record = std::move(rec);
  return out;
}

}  // namespace slim

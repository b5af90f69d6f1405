#pragma once

#include <array>
#include <vector>

#include "slim/rng.hpp"
#include "slim/skeldata.hpp"
#include "slim/views.hpp"

namespace slim {

struct AugConfig {
  double p_apply = 0.5;
  double theta_tilt_deg = 30.0;
  double theta_vert_deg = 180.0;
  double scale_lo = 0.85;
  double scale_hi = 1.15;

  void validate() const;
};

// Radians. alpha about x (tilt), beta about y (vertical), gamma about z (tilt).
struct RotationAngles {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
};

using Mat3 = std::array<std::array<double, 3>, 3>;

// R = Rz(gamma) * Ry(beta) * Rx(alpha).
Mat3 rotation_matrix(const RotationAngles& angles);

SkeletonSequence rotate(const SkeletonSequence& seq, const RotationAngles& angles);
RotationAngles sample_rotation(const AugConfig& cfg, Rng& rng);

SkeletonSequence mirror(const SkeletonSequence& seq, const SkeletonTopology& topo);

// One factor per entry of topo.groups. A bone is scaled by the factor of the
// group that owns its child joint.
SkeletonSequence scale_bones(const SkeletonSequence& seq, const SkeletonTopology& topo,
                             const std::vector<double>& factors);
std::vector<double> sample_scale_factors(const SkeletonTopology& topo, const AugConfig& cfg,
                                         Rng& rng);

struct SaaRecord {
  bool rotated = false;
  bool mirrored = false;
  bool scaled = false;
  RotationAngles angles;
  std::vector<double> factors;
};

// rotate -> mirror -> scale, each with probability p_apply.
View apply_saa(const View& view, const SkeletonTopology& topo, const AugConfig& cfg, Rng& rng,
               SaaRecord* record = nullptr);

}  // namespace slim

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "slim/augment.hpp"
#include "slim/error.hpp"
#include "test_util.hpp"

namespace slim {
namespace {

using testing::chain3;
using testing::kinect25;
using testing::random_sequence;

constexpr double kDeg = std::numbers::pi / 180.0;

double dist(const SkeletonSequence& s, int t, int a, int b) {
  double d = 0.0;
  for (int c = 0; c < 3; ++c) d += std::pow(s.at(t, a, c) - s.at(t, b, c), 2);
  return std::sqrt(d);
}

double bone_len(const SkeletonSequence& s, const SkeletonTopology& topo, int t, int j) {
  return dist(s, t, j, topo.parents[j]);
}

TEST(Rotate, ZeroAnglesIsIdentity) {
  Rng rng(1);
  const auto s = random_sequence(4, 25, rng);
  const auto r = rotate(s, {});
  for (std::size_t i = 0; i < s.coords.size(); ++i) EXPECT_NEAR(r.coords[i], s.coords[i], 1e-7);
}

TEST(Rotate, HalfTurnAboutVertical) {
  SkeletonSequence s(1, 1);
  s.at(0, 0, 0) = 1.0;
  s.at(0, 0, 1) = 2.0;
  s.at(0, 0, 2) = 3.0;
  const auto r = rotate(s, {0.0, std::numbers::pi, 0.0});
  EXPECT_NEAR(r.at(0, 0, 0), -1.0, 1e-12);
  EXPECT_NEAR(r.at(0, 0, 1), 2.0, 1e-12);
  EXPECT_NEAR(r.at(0, 0, 2), -3.0, 1e-12);
}

TEST(Rotate, MatrixIsZYXComposition) {
  // Hand-built elementary rotations, multiplied in z * y * x order.
  const RotationAngles ang{0.3, -1.1, 0.7};
  const auto rx = [](double a) { return Mat3{{{1, 0, 0}, {0, std::cos(a), -std::sin(a)}, {0, std::sin(a), std::cos(a)}}}; };
  const auto ry = [](double a) { return Mat3{{{std::cos(a), 0, std::sin(a)}, {0, 1, 0}, {-std::sin(a), 0, std::cos(a)}}}; };
  const auto rz = [](double a) { return Mat3{{{std::cos(a), -std::sin(a), 0}, {std::sin(a), std::cos(a), 0}, {0, 0, 1}}}; };
  const auto mul = [](const Mat3& a, const Mat3& b) {
    Mat3 c{};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) c[i][j] += a[i][k] * b[k][j];
    return c;
  };
  const Mat3 expected = mul(rz(ang.gamma), mul(ry(ang.beta), rx(ang.alpha)));
  const Mat3 got = rotation_matrix(ang);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(got[i][j], expected[i][j], 1e-14);
}

TEST(Rotate, SampledMatricesAreProperRotationsAndIsometries) {
  Rng rng(2);
  const AugConfig cfg;
  const auto s = random_sequence(3, 25, rng);
  for (int i = 0; i < 500; ++i) {
    const auto R = rotation_matrix(sample_rotation(cfg, rng));
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        double dot = 0.0;
        for (int k = 0; k < 3; ++k) dot += R[k][a] * R[k][b];
        EXPECT_NEAR(dot, a == b ? 1.0 : 0.0, 1e-6);
      }
    const double det = R[0][0] * (R[1][1] * R[2][2] - R[1][2] * R[2][1]) -
                       R[0][1] * (R[1][0] * R[2][2] - R[1][2] * R[2][0]) +
                       R[0][2] * (R[1][0] * R[2][1] - R[1][1] * R[2][0]);
    EXPECT_NEAR(det, 1.0, 1e-6);
  }
  const auto r = rotate(s, sample_rotation(cfg, rng));
  for (int t = 0; t < 3; ++t)
    for (int a = 0; a < 25; ++a)
      for (int b = a + 1; b < 25; ++b) EXPECT_NEAR(dist(r, t, a, b), dist(s, t, a, b), 1e-5);
}

TEST(SampleRotation, Ranges) {
  Rng rng(3);
  AugConfig cfg;
  double max_tilt = 0.0, min_beta = 0.0, max_beta = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const auto a = sample_rotation(cfg, rng);
    max_tilt = std::max({max_tilt, std::abs(a.alpha), std::abs(a.gamma)});
    min_beta = std::min(min_beta, a.beta);
    max_beta = std::max(max_beta, a.beta);
  }
  EXPECT_LE(max_tilt, 30.0 * kDeg);
  EXPECT_GT(max_tilt, 29.0 * kDeg);
  EXPECT_LT(min_beta, -175.0 * kDeg);
  EXPECT_GT(max_beta, 175.0 * kDeg);
  EXPECT_GE(min_beta, -180.0 * kDeg);
  EXPECT_LE(max_beta, 180.0 * kDeg);

  cfg.theta_tilt_deg = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto a = sample_rotation(cfg, rng);
    EXPECT_EQ(a.alpha, 0.0);
    EXPECT_EQ(a.gamma, 0.0);
  }
}

TEST(Mirror, Involution) {
  const auto topo = kinect25();
  Rng rng(4);
  const auto s = random_sequence(5, 25, rng);
  EXPECT_EQ(mirror(mirror(s, topo), topo), s);
}

TEST(Mirror, CentralJointStaysAndReflects) {
  const auto topo = kinect25();
  SkeletonSequence s(1, 25);
  s.at(0, 1, 0) = 1.0;
  s.at(0, 1, 1) = 2.0;
  s.at(0, 1, 2) = 3.0;
  const auto m = mirror(s, topo);
  EXPECT_EQ(m.at(0, 1, 0), -1.0);
  EXPECT_EQ(m.at(0, 1, 1), 2.0);
  EXPECT_EQ(m.at(0, 1, 2), 3.0);
}

TEST(Mirror, LeftHandTipMovesToRight) {
  const auto topo = kinect25();
  Rng rng(5);
  const auto s = random_sequence(2, 25, rng);
  const auto m = mirror(s, topo);
  for (int t = 0; t < 2; ++t) {
    EXPECT_EQ(m.at(t, 23, 0), -s.at(t, 21, 0));
    EXPECT_EQ(m.at(t, 23, 1), s.at(t, 21, 1));
    EXPECT_EQ(m.at(t, 23, 2), s.at(t, 21, 2));
    EXPECT_EQ(m.at(t, 21, 0), -s.at(t, 23, 0));
  }
}

TEST(Mirror, PreservesDistances) {
  const auto topo = kinect25();
  Rng rng(6);
  const auto s = random_sequence(2, 25, rng);
  const auto m = mirror(s, topo);
  const auto sigma = topo.swap_permutation();
  for (int a = 0; a < 25; ++a)
    for (int b = 0; b < 25; ++b) EXPECT_NEAR(dist(m, 0, a, b), dist(s, 0, sigma[a], sigma[b]), 1e-12);
}

TEST(ScaleBones, ChainExample) {
  SkeletonSequence s(1, 3);
  s.at(0, 1, 1) = 1.0;
  s.at(0, 2, 1) = 2.0;
  const auto r = scale_bones(s, chain3(), {2.0});
  EXPECT_NEAR(r.at(0, 0, 1), 0.0, 1e-12);
  EXPECT_NEAR(r.at(0, 1, 1), 2.0, 1e-12);
  EXPECT_NEAR(r.at(0, 2, 1), 4.0, 1e-12);
}

TEST(ScaleBones, UnitFactorsAreIdentity) {
  const auto topo = kinect25();
  Rng rng(7);
  const auto s = random_sequence(4, 25, rng);
  const auto r = scale_bones(s, topo, std::vector<double>(5, 1.0));
  for (std::size_t i = 0; i < s.coords.size(); ++i) EXPECT_NEAR(r.coords[i], s.coords[i], 1e-6);
}

TEST(ScaleBones, LengthsScaleByChildGroupAndDirectionsHold) {
  const auto topo = kinect25();
  const auto group = topo.group_of_joint();
  Rng rng(8);
  const AugConfig cfg;
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = random_sequence(3, 25, rng);
    const auto f = sample_scale_factors(topo, cfg, rng);
    ASSERT_EQ(f.size(), 5u);
    for (double v : f) {
      EXPECT_GE(v, 0.85);
      EXPECT_LE(v, 1.15);
    }
    const auto r = scale_bones(s, topo, f);
    for (int t = 0; t < 3; ++t) {
      for (int c = 0; c < 3; ++c) EXPECT_EQ(r.at(t, 0, c), s.at(t, 0, c));
      for (int j = 1; j < 25; ++j) {
        const double before = bone_len(s, topo, t, j);
        const double after = bone_len(r, topo, t, j);
        if (before < 1e-9) continue;
        EXPECT_NEAR(after / before, f[group[j]], 1e-6);
        for (int c = 0; c < 3; ++c) {
          const double u0 = (s.at(t, j, c) - s.at(t, topo.parents[j], c)) / before;
          const double u1 = (r.at(t, j, c) - r.at(t, topo.parents[j], c)) / after;
          EXPECT_NEAR(u0, u1, 1e-6);
        }
      }
    }
  }
}

View make_view(const SkeletonSequence& s) {
  View v;
  v.sequence = s;
  v.interval = {0, s.frames - 1};
  v.target_frames = s.frames;
  return v;
}

TEST(ApplySaa, ZeroProbabilityIsIdentity) {
  const auto topo = kinect25();
  Rng rng(9);
  const auto v = make_view(random_sequence(8, 25, rng));
  AugConfig cfg;
  cfg.p_apply = 0.0;
  for (int i = 0; i < 20; ++i) EXPECT_EQ(apply_saa(v, topo, cfg, rng).sequence, v.sequence);
}

TEST(ApplySaa, FullProbabilityComposesInFixedOrder) {
  const auto topo = kinect25();
  Rng src(10);
  const auto v = make_view(random_sequence(8, 25, src));
  AugConfig cfg;
  cfg.p_apply = 1.0;
  Rng a(55), b(55);
  SaaRecord rec;
  const auto out = apply_saa(v, topo, cfg, a, &rec);
  EXPECT_TRUE(rec.rotated && rec.mirrored && rec.scaled);
  const auto expected = scale_bones(mirror(rotate(v.sequence, rec.angles), topo), topo, rec.factors);
  for (std::size_t i = 0; i < expected.coords.size(); ++i)
    EXPECT_NEAR(out.sequence.coords[i], expected.coords[i], 1e-12);
  EXPECT_EQ(apply_saa(v, topo, cfg, b).sequence, out.sequence);
  EXPECT_EQ(out.interval, v.interval);
}

TEST(ApplySaa, FiringRates) {
  const auto topo = kinect25();
  Rng src(11);
  const auto v = make_view(random_sequence(1, 25, src));
  const AugConfig cfg;
  Rng rng(12);
  int rot = 0, mir = 0, sca = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    SaaRecord rec;
    apply_saa(v, topo, cfg, rng, &rec);
    rot += rec.rotated;
    mir += rec.mirrored;
    sca += rec.scaled;
  }
  for (int k : {rot, mir, sca}) EXPECT_NEAR(static_cast<double>(k) / n, 0.5, 0.02);
}

TEST(AugConfig, Validation) {
  AugConfig cfg;
  cfg.p_apply = 1.5;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = {};
  cfg.scale_lo = 1.2;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = {};
  cfg.theta_tilt_deg = -1;
  EXPECT_THROW(cfg.validate(), ValidationError);
}

}  // namespace
}  // namespace slim

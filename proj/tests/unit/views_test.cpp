#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "slim/error.hpp"
#include "slim/views.hpp"
#include "test_util.hpp"

namespace slim {
namespace {

using testing::random_sequence;

// Sequence whose coordinates encode the frame index, so selected frames can be
// read back from the view.
SkeletonSequence frame_ramp(int frames, int joints = 2) {
  SkeletonSequence s(frames, joints);
  for (int t = 0; t < frames; ++t)
    for (int j = 0; j < joints; ++j)
      for (int c = 0; c < 3; ++c) s.at(t, j, c) = t;
  return s;
}

TEST(GlobalInterval, LengthAndContainment) {
  Rng rng(1);
  for (int i = 0; i < 10000; ++i) {
    const auto iv = sample_global_interval(100, rng);
    EXPECT_GE(iv.length(), 50);
    EXPECT_LE(iv.length(), 100);
    EXPECT_GE(iv.start, 0);
    EXPECT_LE(iv.end, 99);
  }
}

TEST(GlobalInterval, FullRatioSpansInput) {
  Rng rng(2);
  const auto iv = sample_global_interval(37, rng, 1.0, 1.0);
  EXPECT_EQ(iv, (Interval{0, 36}));
}

TEST(GlobalInterval, LengthDistributionChiSquare) {
  // round(u * 100) with u ~ U(0.5, 1): lengths 51..99 have mass 0.02 each,
  // the two endpoints 0.01 each.
  Rng rng(3);
  const int draws = 10000;
  std::map<int, int> counts;
  for (int i = 0; i < draws; ++i) ++counts[sample_global_interval(100, rng).length()];
  double chi2 = 0.0;
  for (int len = 50; len <= 100; ++len) {
    const double p = (len == 50 || len == 100) ? 0.01 : 0.02;
    const double expected = p * draws;
    const double diff = counts[len] - expected;
    chi2 += diff * diff / expected;
  }
  // 50 degrees of freedom; 86.66 is the 0.999 quantile.
  EXPECT_LT(chi2, 86.66);
}

TEST(GlobalInterval, TooShortInput) {
  Rng rng(4);
  EXPECT_THROW(sample_global_interval(1, rng), ValidationError);
}

TEST(LocalInterval, LengthBounds) {
  Rng rng(5);
  const Interval anchor{10, 73};
  for (int i = 0; i < 10000; ++i) {
    const auto a = sample_local_interval(anchor, 0.35, 0.70, rng);
    EXPECT_GE(a.length(), 22);
    EXPECT_LE(a.length(), 45);
    EXPECT_TRUE(anchor.contains(a));
    const auto b = sample_local_interval(anchor, 0.05, 0.20, rng);
    EXPECT_GE(b.length(), 3);
    EXPECT_LE(b.length(), 13);
    EXPECT_TRUE(anchor.contains(b));
  }
}

TEST(LocalInterval, DegenerateAnchor) {
  Rng rng(6);
  EXPECT_EQ(sample_local_interval({5, 5}, 0.35, 0.7, rng), (Interval{5, 5}));
}

TEST(LocalInterval, BadRatios) {
  Rng rng(7);
  EXPECT_THROW(sample_local_interval({0, 9}, 0.0, 0.5, rng), ValidationError);
  EXPECT_THROW(sample_local_interval({0, 9}, 0.6, 0.5, rng), ValidationError);
  EXPECT_THROW(sample_local_interval({0, 9}, 0.5, 1.2, rng), ValidationError);
}

TEST(ExtractView, ExactFitIsIdentity) {
  Rng rng(8);
  const auto s = random_sequence(64, 3, rng);
  const auto v = extract_view(s, {0, 63}, 64);
  EXPECT_EQ(v.sequence, s);
}

TEST(ExtractView, UpsamplesShortIntervalPreservingEndpoints) {
  Rng rng(9);
  const auto s = random_sequence(20, 2, rng);
  const auto v = extract_view(s, {0, 7}, 32);
  ASSERT_EQ(v.sequence.frames, 32);
  for (int j = 0; j < 2; ++j)
    for (int c = 0; c < 3; ++c) {
      EXPECT_EQ(v.sequence.at(0, j, c), s.at(0, j, c));
      EXPECT_EQ(v.sequence.at(31, j, c), s.at(7, j, c));
    }
  // Interior frame k sits at source position 7k/31.
  const double pos = 7.0 * 10 / 31.0;
  const int lo = static_cast<int>(pos);
  const double w = pos - lo;
  EXPECT_NEAR(v.sequence.at(10, 1, 2), (1 - w) * s.at(lo, 1, 2) + w * s.at(lo + 1, 1, 2), 1e-12);
}

TEST(ExtractView, RoundedLinspaceSelection) {
  const auto v = extract_view(frame_ramp(128), {0, 127}, 8);
  std::vector<int> picked;
  for (int k = 0; k < 8; ++k) picked.push_back(static_cast<int>(v.sequence.at(k, 0, 0)));
  EXPECT_EQ(picked, (std::vector<int>{0, 18, 36, 54, 73, 91, 109, 127}));
}

TEST(ExtractView, OffsetIntervalSelection) {
  const auto v = extract_view(frame_ramp(100), {20, 59}, 16);
  for (int k = 0; k < 16; ++k) {
    const double expected = std::round(20.0 + k * 39.0 / 15.0);
    EXPECT_EQ(v.sequence.at(k, 1, 0), expected);
  }
}

TEST(ExtractView, InvalidInterval) {
  const auto s = frame_ramp(10);
  EXPECT_THROW(extract_view(s, {5, 10}, 4), ValidationError);
  EXPECT_THROW(extract_view(s, {6, 5}, 4), ValidationError);
  EXPECT_THROW(extract_view(s, {0, 5}, 0), ValidationError);
}

TEST(ViewSet, StructureAndContainment) {
  Rng rng(10);
  const auto s = frame_ramp(120);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto vs = make_view_set(s, rng);
    ASSERT_EQ(vs.size(), 14u);
    EXPECT_EQ(vs.globals[0].kind, ViewKind::Global1);
    EXPECT_EQ(vs.globals[1].kind, ViewKind::Global2);
    for (int a = 0; a < 2; ++a) {
      EXPECT_EQ(vs.globals[a].sequence.frames, 64);
      ASSERT_EQ(vs.locals[a].size(), 6u);
      const std::vector<int> frames = {32, 32, 16, 16, 8, 8};
      const std::vector<ViewKind> kinds = {ViewKind::Local32, ViewKind::Local32, ViewKind::Local16,
                                           ViewKind::Local16, ViewKind::Local8,  ViewKind::Local8};
      for (int i = 0; i < 6; ++i) {
        const auto& v = vs.locals[a][i];
        EXPECT_EQ(v.sequence.frames, frames[i]);
        EXPECT_EQ(v.kind, kinds[i]);
        EXPECT_TRUE(vs.globals[a].interval.contains(v.interval));
        // Every frame value must come from inside the local interval.
        for (int t = 0; t < v.sequence.frames; ++t) {
          EXPECT_GE(v.sequence.at(t, 0, 0), v.interval.start);
          EXPECT_LE(v.sequence.at(t, 0, 0), v.interval.end);
        }
      }
    }
  }
}

TEST(ViewSet, RatioBoundsWithRounding) {
  Rng rng(11);
  const auto s = frame_ramp(64);
  const ViewConfig cfg;
  for (int trial = 0; trial < 2000; ++trial) {
    const auto vs = make_view_set(s, rng, cfg);
    for (int a = 0; a < 2; ++a) {
      const int anchor_len = vs.globals[a].interval.length();
      int idx = 0;
      for (const auto& spec : cfg.locals)
        for (int i = 0; i < spec.count; ++i, ++idx) {
          const int len = vs.locals[a][idx].interval.length();
          EXPECT_GE(len, std::max(1L, std::lround(spec.ratio_lo * anchor_len)));
          EXPECT_LE(len, std::lround(spec.ratio_hi * anchor_len));
        }
    }
  }
}

TEST(ViewSet, Deterministic) {
  Rng src(12);
  const auto s = random_sequence(80, 4, src);
  Rng a(99), b(99);
  const auto x = make_view_set(s, a);
  const auto y = make_view_set(s, b);
  for (int g = 0; g < 2; ++g) {
    EXPECT_EQ(x.globals[g].interval, y.globals[g].interval);
    EXPECT_EQ(x.globals[g].sequence, y.globals[g].sequence);
    for (std::size_t i = 0; i < x.locals[g].size(); ++i) {
      EXPECT_EQ(x.locals[g][i].interval, y.locals[g][i].interval);
      EXPECT_EQ(x.locals[g][i].sequence, y.locals[g][i].sequence);
    }
  }
  EXPECT_TRUE(a == b);
}

}  // namespace
}  // namespace slim

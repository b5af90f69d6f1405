#include <gtest/gtest.h>

#include <Eigen/Core>
#include <cmath>

#include "slim/masking.hpp"
#include "test_util.hpp"

namespace slim {
namespace {

using testing::kinect25;

// Rebuilds the mask from the recorded steps plus the stall fill, and checks
// each step against the tube rule.
void check_tube_structure(const TubeMask& m, const SkeletonTopology& topo, const MaskConfig& cfg) {
  std::vector<std::uint8_t> replay(m.grid.size(), 0);
  int count = 0;
  for (const auto& s : m.steps) {
    ASSERT_GE(s.group, 0);
    ASSERT_LT(s.group, static_cast<int>(topo.groups.size()));
    const auto& chain = topo.groups[s.group].joints;
    ASSERT_GE(s.width, 1);
    ASSERT_LE(s.chain_start + s.width, static_cast<int>(chain.size()));
    EXPECT_EQ(s.duration, std::clamp(static_cast<int>(std::lround(s.area / s.width)), 1, m.grid.temporal));
    ASSERT_GE(s.t_start, 0);
    ASSERT_LE(s.t_start + s.duration, m.grid.temporal);
    EXPECT_LE(s.area, cfg.max_area_fraction * m.grid.size() + 1e-9);
    int added = 0;
    for (int t = s.t_start; t < s.t_start + s.duration; ++t)
      for (int k = s.chain_start; k < s.chain_start + s.width; ++k) {
        auto& cell = replay[t * m.grid.joints + chain[k]];
        if (!cell) ++added;
        cell = 1;
      }
    EXPECT_EQ(added, s.added);
    count += added;
  }
  int extra = 0;
  for (int i = 0; i < m.grid.size(); ++i)
    if (m.cells[i] && !replay[i]) ++extra;
    else EXPECT_EQ(m.cells[i], replay[i]);
  EXPECT_EQ(extra, m.stall_filled);
  EXPECT_EQ(count + extra, m.count);
}

TEST(TubeMask, RatioBoundsOverManyTrials) {
  const auto topo = kinect25();
  const MaskConfig cfg;
  const TokenGrid grid{8, 25};
  Rng rng(1);
  const int w_max = topo.max_group_size();
  for (int i = 0; i < 10000; ++i) {
    const auto m = generate_tube_mask(grid, topo, cfg, rng);
    EXPECT_GE(m.target, 100);
    EXPECT_LE(m.target, 180);
    EXPECT_GE(m.count, m.target);
    EXPECT_LE(m.count, m.target + w_max);
    int c = 0;
    for (auto v : m.cells) c += v;
    EXPECT_EQ(c, m.count);
    const double ratio = static_cast<double>(m.count) / grid.size();
    EXPECT_GE(ratio, 0.5);
    EXPECT_LE(ratio, 0.9 + static_cast<double>(w_max) / grid.size());
  }
}

TEST(TubeMask, StepsAreSingleGroupTubes) {
  const auto topo = kinect25();
  const MaskConfig cfg;
  Rng rng(2);
  for (int T : {8, 4, 2, 1})
    for (int i = 0; i < 500; ++i) check_tube_structure(generate_tube_mask({T, 25}, topo, cfg, rng), topo, cfg);
}

TEST(TubeMask, DurationTradesOffAgainstWidth) {
  // Area 8 on an 8-row grid: a single joint spans all rows, four joints two.
  const auto clamp_h = [](double area, int w, int T) {
    return std::clamp(static_cast<int>(std::lround(area / w)), 1, T);
  };
  EXPECT_EQ(clamp_h(8, 1, 8), 8);
  EXPECT_EQ(clamp_h(8, 4, 8), 2);
  // And the generator obeys the same rule for every step it records.
  const auto topo = kinect25();
  Rng rng(3);
  int seen_full = 0;
  for (int i = 0; i < 200; ++i) {
    const auto m = generate_tube_mask({8, 25}, topo, MaskConfig{}, rng);
    for (const auto& s : m.steps) {
      EXPECT_EQ(s.duration, clamp_h(s.area, s.width, 8));
      if (s.width == 1 && s.duration == 8) ++seen_full;
    }
  }
  EXPECT_GT(seen_full, 0);
}

TEST(TubeMask, LocalGridsRespectTemporalClamp) {
  const auto topo = kinect25();
  Rng rng(4);
  for (int i = 0; i < 2000; ++i) {
    const auto m = generate_tube_mask({1, 25}, topo, MaskConfig{}, rng);
    EXPECT_GE(m.target, 13);
    EXPECT_LE(m.target, 22);
    for (const auto& s : m.steps) EXPECT_EQ(s.duration, 1);
  }
}

TEST(TubeMask, StallGuardKeepsCountContract) {
  const auto topo = kinect25();
  MaskConfig cfg;
  cfg.stall_limit = 1;
  cfg.ratio_lo = 0.85;
  cfg.ratio_hi = 0.89;
  Rng rng(5);
  int guarded = 0;
  for (int i = 0; i < 3000; ++i) {
    const auto m = generate_tube_mask({1, 25}, topo, cfg, rng);
    EXPECT_GE(m.count, m.target);
    if (m.stall_filled > 0) {
      ++guarded;
      EXPECT_EQ(m.count, m.target);
    }
    check_tube_structure(m, topo, cfg);
  }
  EXPECT_GT(guarded, 0);
}

TEST(TubeMask, Deterministic) {
  const auto topo = kinect25();
  Rng a(77), b(77);
  for (int i = 0; i < 50; ++i) {
    const auto x = generate_tube_mask({8, 25}, topo, MaskConfig{}, a);
    const auto y = generate_tube_mask({8, 25}, topo, MaskConfig{}, b);
    EXPECT_EQ(x.cells, y.cells);
    EXPECT_EQ(render_mask(x), render_mask(y));
  }
}

TEST(TubeMask, GridMustMatchTopology) {
  Rng rng(6);
  EXPECT_THROW(generate_tube_mask({8, 24}, kinect25(), MaskConfig{}, rng), ValidationError);
  MaskConfig bad;
  bad.ratio_hi = 1.0;
  EXPECT_THROW(generate_tube_mask({8, 25}, kinect25(), bad, rng), ValidationError);
}

TEST(IndependentMask, ExactTargetCount) {
  MaskConfig cfg;
  cfg.strategy = MaskStrategy::Independent;
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    const auto m = generate_mask({8, 25}, kinect25(), cfg, rng);
    int c = 0;
    for (auto v : m.cells) c += v;
    EXPECT_EQ(c, m.target);
    EXPECT_EQ(m.count, m.target);
    EXPECT_TRUE(m.steps.empty());
  }
}

TEST(RenderMask, Layout) {
  auto m = empty_mask({2, 3});
  m.cells[1] = 1;
  m.cells[5] = 1;
  m.count = 2;
  EXPECT_EQ(render_mask(m), ".#.\n..#\n");
}

TEST(ApplyMask, EmptyMaskIsIdentity) {
  Eigen::MatrixXd tokens = Eigen::MatrixXd::Random(6, 4);
  const Eigen::MatrixXd before = tokens;
  const Eigen::RowVectorXd mt = Eigen::RowVectorXd::Constant(4, 9.0);
  apply_mask(tokens, empty_mask({2, 3}), mt);
  EXPECT_TRUE(tokens == before);
}

TEST(ApplyMask, FullMaskReplacesEveryRow) {
  Eigen::MatrixXd tokens = Eigen::MatrixXd::Random(6, 4);
  auto m = empty_mask({2, 3});
  std::fill(m.cells.begin(), m.cells.end(), 1);
  m.count = 6;
  const Eigen::RowVectorXd mt = Eigen::RowVectorXd::LinSpaced(4, 1, 4);
  apply_mask(tokens, m, mt);
  for (int i = 0; i < 6; ++i) EXPECT_TRUE(tokens.row(i) == mt);
}

TEST(ApplyMask, TouchesExactlyMaskedRows) {
  const auto topo = kinect25();
  Rng rng(8);
  const auto m = generate_tube_mask({8, 25}, topo, MaskConfig{}, rng);
  Eigen::MatrixXf tokens = Eigen::MatrixXf::Random(200, 16);
  const Eigen::MatrixXf before = tokens;
  const Eigen::RowVectorXf mt = Eigen::RowVectorXf::Constant(16, 0.25f);
  apply_mask(tokens, m, mt);
  for (int i = 0; i < 200; ++i) {
    if (m.masked(i)) EXPECT_TRUE(tokens.row(i) == mt);
    else EXPECT_TRUE(tokens.row(i) == before.row(i));
  }
  auto single = empty_mask({8, 25});
  single.cells[0] = 1;
  single.count = 1;
  Eigen::MatrixXf t2 = before;
  apply_mask(t2, single, mt);
  EXPECT_TRUE(t2.row(0) == mt);
  EXPECT_TRUE(t2.bottomRows(199) == before.bottomRows(199));
}

TEST(ApplyMask, ShapeMismatch) {
  Eigen::MatrixXd tokens(5, 4);
  const Eigen::RowVectorXd mt = Eigen::RowVectorXd::Zero(4);
  EXPECT_THROW(apply_mask(tokens, empty_mask({2, 3}), mt), ValidationError);
  Eigen::MatrixXd ok(6, 4);
  const Eigen::RowVectorXd narrow = Eigen::RowVectorXd::Zero(3);
  EXPECT_THROW(apply_mask(ok, empty_mask({2, 3}), narrow), ValidationError);
}

}  // namespace
}  // namespace slim

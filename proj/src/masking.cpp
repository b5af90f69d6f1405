#include "slim/masking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace slim {
namespace {

int draw_target(int n, const MaskConfig& cfg, Rng& rng) {
  const int lo = static_cast<int>(std::ceil(cfg.ratio_lo * n - 1e-9));
  const int hi = static_cast<int>(std::floor(cfg.ratio_hi * n + 1e-9));
  const double draw = rng.uniform(cfg.ratio_lo * n, cfg.ratio_hi * n);
  return std::clamp(static_cast<int>(std::lround(draw)), std::max(lo, 1), std::max(hi, std::max(lo, 1)));
}

}  // namespace

void MaskConfig::validate() const {
  if (!(ratio_lo > 0.0 && ratio_lo <= ratio_hi && ratio_hi < 1.0))
    throw ValidationError("mask ratios must satisfy 0 < lo <= hi < 1");
  if (min_area < 1) throw ValidationError("mask min_area must be >= 1");
  if (!(max_area_fraction > 0.0 && max_area_fraction <= 1.0))
    throw ValidationError("mask max_area_fraction must be in (0, 1]");
  if (global_prob < 0.0 || global_prob > 1.0 || local_prob < 0.0 || local_prob > 1.0)
    throw ValidationError("mask probabilities must be in [0, 1]");
  if (stall_limit < 1) throw ValidationError("mask stall_limit must be >= 1");
}

std::vector<int> TubeMask::masked_indices() const {
  std::vector<int> out;
  out.reserve(count);
  for (int i = 0; i < grid.size(); ++i)
    if (cells[i]) out.push_back(i);
  return out;
}

TubeMask empty_mask(const TokenGrid& grid) {
  TubeMask m;
  m.grid = grid;
  m.cells.assign(grid.size(), 0);
  return m;
}

TubeMask generate_tube_mask(const TokenGrid& grid, const SkeletonTopology& topo,
                            const MaskConfig& cfg, Rng& rng) {
  cfg.validate();
  if (grid.temporal < 1 || grid.joints < 1) throw ValidationError("empty token grid");
  if (grid.joints != topo.num_joints)
    throw ValidationError("tube masking needs one joint token per topology joint");

  TubeMask mask = empty_mask(grid);
  const int n = grid.size();
  mask.target = draw_target(n, cfg, rng);
  const double max_area = cfg.max_area_fraction * n;

  int stalls = 0;
  while (mask.count < mask.target) {
    const double p_max = std::min(static_cast<double>(mask.target - mask.count), max_area);

    MaskStep step;
    step.group = static_cast<int>(rng.uniform_int(0, static_cast<std::int64_t>(topo.groups.size()) - 1));
    const auto& chain = topo.groups[step.group].joints;
    const int m = static_cast<int>(chain.size());
    step.width = static_cast<int>(rng.uniform_int(1, m));
    step.chain_start = static_cast<int>(rng.uniform_int(0, m - step.width));

    // The pseudocode's U(A_min, P_max) is inverted once the deficit drops
    // below A_min; the area is then the deficit itself.
    step.area = p_max < cfg.min_area ? p_max : rng.uniform(cfg.min_area, p_max);
    step.duration = std::clamp(static_cast<int>(std::lround(step.area / step.width)), 1, grid.temporal);
    step.t_start = static_cast<int>(rng.uniform_int(0, grid.temporal - step.duration));

    for (int t = step.t_start; t < step.t_start + step.duration; ++t) {
      for (int k = step.chain_start; k < step.chain_start + step.width; ++k) {
        auto& cell = mask.cells[static_cast<std::size_t>(t) * grid.joints + chain[k]];
        if (!cell) {
          cell = 1;
          ++step.added;
        }
      }
    }
    mask.count += step.added;
    mask.steps.push_back(step);

    stalls = step.added == 0 ? stalls + 1 : 0;
    if (stalls >= cfg.stall_limit) {
      for (int i = n - 1; i >= 0 && mask.count < mask.target; --i) {
        if (!mask.cells[i]) {
          mask.cells[i] = 1;
          ++mask.count;
          ++mask.stall_filled;
        }
      }
    }
  }
  return mask;
}

TubeMask generate_independent_mask(const TokenGrid& grid, const MaskConfig& cfg, Rng& rng) {
  cfg.validate();
  if (grid.temporal < 1 || grid.joints < 1) throw ValidationError("empty token grid");
  TubeMask mask = empty_mask(grid);
  const int n = grid.size();
  mask.target = draw_target(n, cfg, rng);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  // Partial Fisher-Yates: the first `target` entries are the masked cells.
  for (int i = 0; i < mask.target; ++i) {
    const int k = static_cast<int>(rng.uniform_int(i, n - 1));
    std::swap(order[i], order[k]);
    mask.cells[order[i]] = 1;
  }
  mask.count = mask.target;
  return mask;
}

TubeMask generate_mask(const TokenGrid& grid, const SkeletonTopology& topo, const MaskConfig& cfg,
                       Rng& rng) {
  return cfg.strategy == MaskStrategy::Tube ? generate_tube_mask(grid, topo, cfg, rng)
                                            : generate_independent_mask(grid, cfg, rng);
}

std::string render_mask(const TubeMask& mask) {
  std::string out;
  out.reserve(static_cast<std::size_t>(mask.grid.temporal) * (mask.grid.joints + 1));
  for (int t = 0; t < mask.grid.temporal; ++t) {
    for (int j = 0; j < mask.grid.joints; ++j) out.push_back(mask.masked(t, j) ? '#' : '.');
    out.push_back('\n');
  }
  return out;
}

}  // namespace slim

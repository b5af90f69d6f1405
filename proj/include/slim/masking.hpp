#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "slim/error.hpp"
#include "slim/rng.hpp"
#include "slim/skeldata.hpp"

namespace slim {

// Token lattice: temporal patches x joint patches, scan order t-major.
struct TokenGrid {
  int temporal = 0;
  int joints = 0;

  int size() const { return temporal * joints; }
};

enum class MaskStrategy { Tube, Independent };

struct MaskConfig {
  double ratio_lo = 0.5;
  double ratio_hi = 0.9;
  int min_area = 8;
  double max_area_fraction = 0.5;
  // Probability that a view receives a mask at all.
  double global_prob = 1.0;
  double local_prob = 0.5;
  // Consecutive zero-gain tube draws before the deficit is filled directly.
  int stall_limit = 32;
  MaskStrategy strategy = MaskStrategy::Tube;

  void validate() const;
};

// One tube placement: chain-contiguous joints [chain_start, chain_start +
// width) of `group`, over temporal tokens [t_start, t_start + duration).
struct MaskStep {
  int group = 0;
  int chain_start = 0;
  int width = 0;
  int t_start = 0;
  int duration = 0;
  double area = 0.0;
  int added = 0;  // newly masked cells
};

struct TubeMask {
  TokenGrid grid;
  std::vector<std::uint8_t> cells;  // 1 = masked
  int target = 0;                   // N_mask
  int count = 0;                    // achieved masked cells
  std::vector<MaskStep> steps;
  int stall_filled = 0;  // cells set by the stall guard

  bool masked(int t, int j) const { return cells[static_cast<std::size_t>(t) * grid.joints + j] != 0; }
  bool masked(int index) const { return cells[index] != 0; }
  bool empty() const { return count == 0; }
  std::vector<int> masked_indices() const;
};

TubeMask empty_mask(const TokenGrid& grid);

// Draws N_mask in [ratio_lo N, ratio_hi N], then places tubes until at
// least N_mask cells are masked.
TubeMask generate_tube_mask(const TokenGrid& grid, const SkeletonTopology& topo,
                            const MaskConfig& cfg, Rng& rng);

// Ablation baseline: N_mask cells chosen independently and uniformly.
TubeMask generate_independent_mask(const TokenGrid& grid, const MaskConfig& cfg, Rng& rng);

TubeMask generate_mask(const TokenGrid& grid, const SkeletonTopology& topo, const MaskConfig& cfg,
                       Rng& rng);

// Text rendering: one row per temporal token, '#' masked and '.' visible.
std::string render_mask(const TubeMask& mask);

// Rows of `tokens` at masked cells are replaced by mask_token; all other
// rows are untouched.
template <typename Derived, typename RowDerived>
void apply_mask(Eigen::MatrixBase<Derived>& tokens, const TubeMask& mask,
                const Eigen::MatrixBase<RowDerived>& mask_token) {
  if (tokens.rows() != mask.grid.size())
    throw ValidationError("apply_mask: token count does not match the mask grid");
  if (mask_token.size() != tokens.cols())
    throw ValidationError("apply_mask: mask token width does not match token width");
  for (int i = 0; i < mask.grid.size(); ++i)
    if (mask.cells[i]) tokens.row(i) = mask_token.reshaped(1, tokens.cols());
}

}  // namespace slim

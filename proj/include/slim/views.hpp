#pragma once

#include <array>
#include <string>
#include <vector>

#include "slim/rng.hpp"
#include "slim/skeldata.hpp"

namespace slim {

// Inclusive frame interval [start, end].
struct Interval {
  int start = 0;
  int end = 0;

  int length() const { return end - start + 1; }
  bool contains(const Interval& other) const { return start <= other.start && other.end <= end; }
  bool operator==(const Interval&) const = default;
};

enum class ViewKind { Global1, Global2, Local32, Local16, Local8, Local };

std::string to_string(ViewKind kind);

struct View {
  SkeletonSequence sequence;  // already resampled to target_frames
  Interval interval;          // in source frame indices
  int target_frames = 0;
  ViewKind kind = ViewKind::Global1;
};

struct LocalCropSpec {
  int frames = 32;
  double ratio_lo = 0.35;
  double ratio_hi = 0.70;
  int count = 2;
};

struct ViewConfig {
  int global_frames = 64;
  double global_ratio_lo = 0.5;
  double global_ratio_hi = 1.0;
  std::vector<LocalCropSpec> locals = {{32, 0.35, 0.70, 2}, {16, 0.15, 0.40, 2}, {8, 0.05, 0.20, 2}};
};

// globals[0] = G1, globals[1] = G2; locals[a] are the crops anchored to
// globals[a], in LocalCropSpec order.
struct ViewSet {
  std::array<View, 2> globals;
  std::array<std::vector<View>, 2> locals;

  std::size_t size() const { return 2 + locals[0].size() + locals[1].size(); }
};

Interval sample_global_interval(int input_frames, Rng& rng, double ratio_lo = 0.5,
                                double ratio_hi = 1.0);
Interval sample_local_interval(const Interval& anchor, double ratio_lo, double ratio_hi, Rng& rng);

// Rounded-linspace frame selection when the interval has at least
// target_frames frames, linear interpolation otherwise. Both interval
// endpoints are always represented.
View extract_view(const SkeletonSequence& seq, const Interval& interval, int target_frames,
                  ViewKind kind = ViewKind::Global1);

ViewSet make_view_set(const SkeletonSequence& seq, Rng& rng, const ViewConfig& cfg = {});

}  // namespace slim

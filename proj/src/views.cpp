#include "slim/views.hpp"

#include <algorithm>
#include <cmath>

#include "slim/error.hpp"

namespace slim {
namespace {

ViewKind local_kind(int frames) {
  switch (frames) {
    case 32: return ViewKind::Local32;
    case 16: return ViewKind::Local16;
    case 8: return ViewKind::Local8;
    default: return ViewKind::Local;
  }
}

}  // namespace

std::string to_string(ViewKind kind) {
  switch (kind) {
    case ViewKind::Global1: return "G1";
    case ViewKind::Global2: return "G2";
    case ViewKind::Local32: return "L32";
    case ViewKind::Local16: return "L16";
    case ViewKind::Local8: return "L8";
    case ViewKind::Local: return "L";
  }
  return "?";
}

Interval sample_global_interval(int input_frames, Rng& rng, double ratio_lo, double ratio_hi) {
  if (input_frames < 2) throw ValidationError("global interval needs at least 2 input frames");
  const double u = rng.uniform(ratio_lo, ratio_hi);
  const int length = std::clamp(static_cast<int>(std::lround(u * input_frames)), 1, input_frames);
  const int start = static_cast<int>(rng.uniform_int(0, input_frames - length));
  return {start, start + length - 1};
}

Interval sample_local_interval(const Interval& anchor, double ratio_lo, double ratio_hi, Rng& rng) {
  if (!(ratio_lo > 0.0 && ratio_lo <= ratio_hi && ratio_hi <= 1.0))
    throw ValidationError("local crop ratios must satisfy 0 < lo <= hi <= 1");
  const int anchor_len = std::max(anchor.length(), 1);
  const double p = rng.uniform(ratio_lo, ratio_hi);
  const int length = std::clamp(static_cast<int>(std::lround(p * anchor_len)), 1, anchor_len);
  const int start = anchor.start + static_cast<int>(rng.uniform_int(0, anchor_len - length));
  return {start, start + length - 1};
}

View extract_view(const SkeletonSequence& seq, const Interval& interval, int target_frames,
                  ViewKind kind) {
  if (interval.start < 0 || interval.end < interval.start || interval.end >= seq.frames)
    throw ValidationError("interval outside the sequence");
  if (target_frames < 1) throw ValidationError("target_frames must be positive");
  View view;
  view.interval = interval;
  view.target_frames = target_frames;
  view.kind = kind;

  const int length = interval.length();
  const std::size_t frame_size = static_cast<std::size_t>(seq.joints) * 3;
  if (length >= target_frames) {
    view.sequence = SkeletonSequence(target_frames, seq.joints);
    for (int k = 0; k < target_frames; ++k) {
      const double pos = target_frames == 1
                             ? interval.start
                             : interval.start + static_cast<double>(k) * (length - 1) / (target_frames - 1);
      const int src = static_cast<int>(std::lround(pos));
      std::copy_n(&seq.coords[src * frame_size], frame_size, &view.sequence.coords[k * frame_size]);
    }
  } else {
    SkeletonSequence clip(length, seq.joints);
    std::copy_n(&seq.coords[interval.start * frame_size], length * frame_size, clip.coords.begin());
    view.sequence = resample_linear(clip, target_frames);
  }
  return view;
}

ViewSet make_view_set(const SkeletonSequence& seq, Rng& rng, const ViewConfig& cfg) {
  if (seq.frames < 2) throw ValidationError("view sampling needs at least 2 frames");
  ViewSet set;
  const Interval g1 = sample_global_interval(seq.frames, rng, cfg.global_ratio_lo, cfg.global_ratio_hi);
  const Interval g2 = sample_global_interval(seq.frames, rng, cfg.global_ratio_lo, cfg.global_ratio_hi);
  set.globals[0] = extract_view(seq, g1, cfg.global_frames, ViewKind::Global1);
  set.globals[1] = extract_view(seq, g2, cfg.global_frames, ViewKind::Global2);
  for (int a = 0; a < 2; ++a) {
    const Interval& anchor = set.globals[a].interval;
    for (const auto& spec : cfg.locals) {
      for (int i = 0; i < spec.count; ++i) {
        const Interval iv = sample_local_interval(anchor, spec.ratio_lo, spec.ratio_hi, rng);
        set.locals[a].push_back(extract_view(seq, iv, spec.frames, local_kind(spec.frames)));
      }
    }
  }
  return set;
}

}  // namespace slim

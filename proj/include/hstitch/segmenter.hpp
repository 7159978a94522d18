#pragma once

#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "hstitch/error.hpp"
#include "hstitch/hypothesis.hpp"

namespace hstitch {

struct Window {
  std::int32_t index = 1;  // 1-based
  double start = 0.0;
  double end = 0.0;

  bool contains(double t) const { return start <= t && t < end; }
  friend bool operator==(const Window&, const Window&) = default;
};

struct WindowPlan {
  std::vector<Window> windows;
  double window_len = 0.0;
  double overlap_ratio = 0.0;

  std::int32_t size() const { return static_cast<std::int32_t>(windows.size()); }
  double stride() const { return window_len * (1.0 - overlap_ratio); }
};

inline constexpr double kMaxOverlapRatio = 0.75;

// Fixed-length windows at a constant stride starting at 0. Windows are added
// until one reaches the end of the recording; the last one may run past it
// (the tail is silence), which keeps every adjacent pair at the same overlap.
inline WindowPlan make_windows(double duration, double window_len, double overlap_ratio) {
  require(duration > 0.0, "duration must be positive");
  require(window_len > 0.0, "window length must be positive");
  require(overlap_ratio < 1.0, "overlap ratio must be below 1");
  require(overlap_ratio >= 0.0 && overlap_ratio <= kMaxOverlapRatio,
          "overlap ratio must lie in [0, 0.75]");
  WindowPlan plan;
  plan.window_len = window_len;
  plan.overlap_ratio = overlap_ratio;
  const double stride = plan.stride();
  for (std::int32_t k = 0;; ++k) {
    const double start = static_cast<double>(k) * stride;
    plan.windows.push_back({k + 1, start, start + window_len});
    if (start + window_len >= duration) break;
  }
  return plan;
}

// A single window spanning the whole recording ("no segmentation").
inline WindowPlan whole_recording_plan(double duration) {
  require(duration > 0.0, "duration must be positive");
  WindowPlan plan;
  plan.window_len = duration;
  plan.overlap_ratio = 0.0;
  plan.windows.push_back({1, 0.0, duration});
  return plan;
}

inline std::vector<HypothesisGroup> group_by_speaker(const std::vector<SegmentHypothesis>& hyps,
                                                     std::int32_t num_speakers,
                                                     std::int32_t num_windows) {
  require(num_speakers >= 1, "need at least one speaker");
  require(num_windows >= 1, "need at least one window");
  std::vector<HypothesisGroup> groups(static_cast<std::size_t>(num_speakers));
  for (SpeakerId k = 0; k < num_speakers; ++k) {
    groups[static_cast<std::size_t>(k)].speaker = k;
    groups[static_cast<std::size_t>(k)].segments.resize(static_cast<std::size_t>(num_windows));
  }
  std::set<std::pair<std::int32_t, SpeakerId>> seen;
  for (const auto& h : hyps) {
    require(h.window >= 1 && h.window <= num_windows, "window index out of range");
    require(h.speaker >= 0 && h.speaker < num_speakers, "speaker id out of range");
    if (!seen.emplace(h.window, h.speaker).second)
      throw Error(ErrorKind::InvalidArgument, "duplicate segment hypothesis");
    groups[static_cast<std::size_t>(h.speaker)].segments[static_cast<std::size_t>(h.window - 1)] =
        h.tokens;
  }
  return groups;
}

}  // namespace hstitch

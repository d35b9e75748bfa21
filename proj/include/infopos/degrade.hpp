#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "infopos/trace_core.hpp"

namespace infopos::degrade {

// Each operator maps a segment to a degraded copy with identical metadata.
// At its neutral parameter (0, 0, 0, 1.0, 0, 1) every operator is the exact
// identity. Results with fewer than 2 samples throw EmptySegment; parameters
// out of range throw InvalidArgument.

// value += N(0, sigma_rel * std(values))
Segment jitter(const Segment& seg, double sigma_rel, std::uint64_t seed);

// Timestamps pass through a strictly increasing map that fixes both ends of
// the segment and moves no point by more than strength * duration / 2.
// The map is a monotone piecewise-cubic Hermite curve through the ends and
// one displaced midpoint knot. 0 <= strength < 1.
Segment time_warp(const Segment& seg, double strength, std::uint64_t seed);

// Drops every sample in one random window of fraction * duration. 0 <= fraction < 1.
Segment time_mask(const Segment& seg, double fraction, std::uint64_t seed);

Segment amplitude_scale(const Segment& seg, double factor);

// Adds +/- magnitude_rel * std(values) at `count` distinct random samples.
Segment spike_inject(const Segment& seg, int count, double magnitude_rel, std::uint64_t seed);

// Keeps samples at indices 0, n, 2n, ...
Segment decimate(const Segment& seg, int keep_every);

// Normalized warp map on [0,1] for a given midpoint displacement, and the
// largest displacement whose map stays within max_shift of the identity.
double warp_map(double x, double displacement);
double max_warp_displacement(double max_shift);

struct Jitter { double sigma_rel = 0.0; };
struct TimeWarp { double strength = 0.0; };
struct TimeMask { double fraction = 0.0; };
struct AmplitudeScale { double factor = 1.0; };
struct SpikeInject { int count = 0; double magnitude_rel = 0.0; };
struct Decimate { int keep_every = 1; };

using Operator = std::variant<Jitter, TimeWarp, TimeMask, AmplitudeScale, SpikeInject, Decimate>;

std::string_view operator_name(const Operator& op);

struct Step {
  Operator op;
  std::uint64_t seed = 0;
};

// Ordered operator list. The empty plan is the rich-data identity.
struct DegradationPlan {
  std::string name = "identity";
  std::string position;  // data-position level name, e.g. "Moderate"
  std::uint64_t seed = 0;
  std::vector<Step> steps;
};

// Applies the steps in order. Step seeds are derived from the plan seed, the
// step seed and position, and the segment identity (scenario, phase type,
// segment_index), so results are reproducible per segment.
Segment apply_plan(const Segment& seg, const DegradationPlan& plan, std::size_t segment_index);

DegradationPlan parse_plan(std::string_view json_text);
std::string plan_to_json(const DegradationPlan& plan);

}  // namespace infopos::degrade

namespace infopos {
using degrade::DegradationPlan;
}

#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "infopos/trace_core.hpp"

namespace infopos {

// One row of a segmentation request: a single phase type ("neural-op"), a
// union ("image-op + neural-op"), or every phase type present ("all").
struct PhaseSelector {
  std::string name;
  std::vector<std::string> members;  // empty when `all` is set
  bool all = false;

  bool operator==(const PhaseSelector&) const = default;
};

PhaseSelector parse_selector(std::string_view text);

// Depth of each phase type in the event hierarchy (0 = outermost).
using PhaseDepths = std::map<std::string, int>;
PhaseDepths phase_depths(const std::vector<PhaseInterval>& intervals);

// Deepest phase level visible at a knowledge level: the lowest level sees
// only the outermost phases, each further level one more, the richest all.
int visible_depth(KnowledgePosition knowledge, const PositionScale& scale);

// Concrete phase types of a selector, in hierarchy order for `all`.
std::vector<std::string> resolve_selector(const PhaseSelector& selector, const PhaseDepths& depths);

bool selector_permitted(const PhaseSelector& selector, KnowledgePosition knowledge,
                        const PositionScale& scale, const PhaseDepths& depths);

struct SegmentationPlan {
  KnowledgePosition knowledge{2};
  PositionScale scale;
  std::vector<PhaseSelector> selectors;
  std::vector<CutKind> cuts{CutKind::Full, CutKind::Ini, CutKind::Mid, CutKind::End};
};

struct SegmentGroup {
  std::string selector;
  CutKind cut = CutKind::Full;
  std::vector<Segment> segments;
};

// One Full segment per interval of `phase_type`, samples in [start, end).
// Throws EmptyPhase or EmptySegment.
std::vector<Segment> informed_cut(const MetricTrace& trace, const std::vector<PhaseInterval>& intervals,
                                  const std::string& phase_type);

// Time-quartile cut of a Full segment: Ini = first quarter of the time span,
// Mid = middle two quarters, End = last quarter. Throws EmptySegment when the
// cut holds fewer than 2 samples.
Segment uninformed_cut(const Segment& segment, CutKind cut);

// selectors x cuts, combination selectors concatenating their members'
// segment lists. Throws InvalidArgument for selectors the plan's knowledge
// level does not permit.
std::vector<SegmentGroup> apply_plan(const MetricTrace& trace, const std::vector<PhaseInterval>& intervals,
                                     const SegmentationPlan& plan);

}  // namespace infopos

#include "infopos/segmentation.hpp"

#include <algorithm>
#include <climits>

#include "infopos/error.hpp"
#include "infopos/text.hpp"

namespace infopos {

namespace {

std::vector<Sample> samples_in(const std::vector<Sample>& samples, double lo, double hi) {
  auto by_t = [](const Sample& s, double t) { return s.t < t; };
  const auto first = std::lower_bound(samples.begin(), samples.end(), lo, by_t);
  const auto last = std::lower_bound(first, samples.end(), hi, by_t);
  return {first, last};
}

std::string describe(const Segment& s) {
  return s.scenario_id + "/" + s.phase_type + "#" + std::to_string(s.instance_id) + "/" +
         std::string(to_string(s.cut));
}

}  // namespace

PhaseSelector parse_selector(std::string_view text) {
  PhaseSelector sel;
  const auto trimmed = text::trim(text);
  if (trimmed.empty()) throw Error(Errc::InvalidArgument, "empty phase selector");
  if (trimmed == "all") {
    sel.name = "all";
    sel.all = true;
    return sel;
  }
  for (auto part : text::split(trimmed, '+')) {
    part = text::trim(part);
    if (part.empty()) throw Error(Errc::InvalidArgument, "malformed selector '" + std::string(text) + "'");
    sel.members.emplace_back(part);
  }
  sel.name = text::join(sel.members, " + ");
  return sel;
}

PhaseDepths phase_depths(const std::vector<PhaseInterval>& intervals) {
  PhaseDepths depths;
  for (const auto& iv : intervals) {
    auto [it, inserted] = depths.emplace(iv.phase_type, iv.depth);
    if (!inserted) it->second = std::max(it->second, iv.depth);
  }
  return depths;
}

int visible_depth(KnowledgePosition knowledge, const PositionScale& scale) {
  if (knowledge.level >= scale.richest()) return INT_MAX;
  return std::max(0, knowledge.level);
}

std::vector<std::string> resolve_selector(const PhaseSelector& selector, const PhaseDepths& depths) {
  if (!selector.all) return selector.members;
  std::vector<std::pair<int, std::string>> ordered;
  for (const auto& [type, depth] : depths) ordered.emplace_back(depth, type);
  std::sort(ordered.begin(), ordered.end());
  std::vector<std::string> out;
  for (auto& [depth, type] : ordered) out.push_back(std::move(type));
  return out;
}

bool selector_permitted(const PhaseSelector& selector, KnowledgePosition knowledge,
                        const PositionScale& scale, const PhaseDepths& depths) {
  const int limit = visible_depth(knowledge, scale);
  for (const auto& member : resolve_selector(selector, depths)) {
    const auto it = depths.find(member);
    if (it == depths.end()) continue;  // unknown phases fail later with EmptyPhase
    if (it->second > limit) return false;
  }
  return true;
}

std::vector<Segment> informed_cut(const MetricTrace& trace, const std::vector<PhaseInterval>& intervals,
                                  const std::string& phase_type) {
  std::vector<Segment> out;
  for (const auto& iv : intervals) {
    if (iv.phase_type != phase_type) continue;
    Segment seg;
    seg.scenario_id = trace.scenario_id;
    seg.metric = trace.metric;
    seg.phase_type = phase_type;
    seg.cut = CutKind::Full;
    seg.label = trace.label;
    seg.instance_id = iv.instance_id;
    seg.t_start = iv.t_start;
    seg.t_end = iv.t_end;
    seg.samples = samples_in(trace.samples, iv.t_start, iv.t_end);
    if (seg.samples.size() < 2) {
      throw Error(Errc::EmptySegment, describe(seg) + " holds " + std::to_string(seg.samples.size()) +
                                          " samples");
    }
    out.push_back(std::move(seg));
  }
  if (out.empty()) throw Error(Errc::EmptyPhase, "no '" + phase_type + "' interval in " + trace.scenario_id);
  std::stable_sort(out.begin(), out.end(),
                   [](const Segment& a, const Segment& b) { return a.t_start < b.t_start; });
  return out;
}

Segment uninformed_cut(const Segment& segment, CutKind cut) {
  if (segment.cut != CutKind::Full) {
    throw Error(Errc::InvalidArgument, "uninformed_cut expects a full segment, got " + describe(segment));
  }
  if (cut == CutKind::Full) return segment;

  const double span = segment.t_end - segment.t_start;
  const double q1 = segment.t_start + 0.25 * span;
  const double q3 = segment.t_start + 0.75 * span;
  double lo = segment.t_start;
  double hi = segment.t_end;
  switch (cut) {
    case CutKind::Ini: hi = q1; break;
    case CutKind::Mid: lo = q1; hi = q3; break;
    case CutKind::End: lo = q3; break;
    case CutKind::Full: break;
  }

  Segment out;
  out.scenario_id = segment.scenario_id;
  out.metric = segment.metric;
  out.phase_type = segment.phase_type;
  out.cut = cut;
  out.label = segment.label;
  out.instance_id = segment.instance_id;
  out.t_start = lo;
  out.t_end = hi;
  out.samples = samples_in(segment.samples, lo, hi);
  if (out.samples.size() < 2) {
    throw Error(Errc::EmptySegment, describe(out) + " holds " + std::to_string(out.samples.size()) +
                                        " samples");
  }
  return out;
}

std::vector<SegmentGroup> apply_plan(const MetricTrace& trace, const std::vector<PhaseInterval>& intervals,
                                     const SegmentationPlan& plan) {
  if (plan.selectors.empty() || plan.cuts.empty()) {
    throw Error(Errc::InvalidArgument, "segmentation plan needs at least one selector and one cut");
  }
  const auto depths = phase_depths(intervals);
  std::vector<SegmentGroup> groups;
  for (const auto& selector : plan.selectors) {
    if (!selector_permitted(selector, plan.knowledge, plan.scale, depths)) {
      throw Error(Errc::InvalidArgument, "selector '" + selector.name + "' needs more system knowledge than " +
                                             plan.scale.name_of(plan.knowledge.level));
    }
    std::vector<Segment> full;
    for (const auto& member : resolve_selector(selector, depths)) {
      auto segs = informed_cut(trace, intervals, member);
      full.insert(full.end(), std::make_move_iterator(segs.begin()), std::make_move_iterator(segs.end()));
    }
    for (CutKind cut : plan.cuts) {
      SegmentGroup group{selector.name, cut, {}};
      group.segments.reserve(full.size());
      for (const auto& seg : full) group.segments.push_back(uninformed_cut(seg, cut));
      groups.push_back(std::move(group));
    }
  }
  return groups;
}

}  // namespace infopos

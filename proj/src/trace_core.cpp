#include "infopos/trace_core.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <utility>

#include "infopos/error.hpp"

namespace infopos {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

std::string_view to_string(MetricKind kind) noexcept {
  switch (kind) {
    case MetricKind::Current: return "current";
    case MetricKind::Power: return "power";
    case MetricKind::Energy: return "energy";
    case MetricKind::Voltage: return "voltage";
  }
  return "current";
}

MetricKind parse_metric(std::string_view name) {
  const std::string n = lower(name);
  if (n == "current") return MetricKind::Current;
  if (n == "power") return MetricKind::Power;
  if (n == "energy") return MetricKind::Energy;
  if (n == "voltage") return MetricKind::Voltage;
  throw Error(Errc::InvalidArgument, "unknown metric '" + std::string(name) + "'");
}

std::string_view to_string(CutKind cut) noexcept {
  switch (cut) {
    case CutKind::Full: return "full";
    case CutKind::Ini: return "ini";
    case CutKind::Mid: return "mid";
    case CutKind::End: return "end";
  }
  return "full";
}

CutKind parse_cut(std::string_view name) {
  const std::string n = lower(name);
  if (n == "full") return CutKind::Full;
  if (n == "ini") return CutKind::Ini;
  if (n == "mid") return CutKind::Mid;
  if (n == "end") return CutKind::End;
  throw Error(Errc::InvalidArgument, "unknown cut '" + std::string(name) + "'");
}

bool LabelSet::contains(std::string_view label) const {
  return std::find(names.begin(), names.end(), label) != names.end();
}

void LabelSet::validate() const {
  if (!contains(kNormalLabel)) throw Error(Errc::InvalidArgument, "label set must contain Normal");
  std::set<std::string_view> seen;
  for (const auto& n : names) {
    if (n.empty()) throw Error(Errc::InvalidArgument, "empty label name");
    if (!seen.insert(n).second) throw Error(Errc::InvalidArgument, "duplicate label " + n);
  }
}

int PositionScale::index_of(std::string_view name) const {
  for (int i = 0; i < size(); ++i) {
    if (lower(levels[static_cast<std::size_t>(i)]) == lower(name)) return i;
  }
  throw Error(Errc::InvalidAxis, "unknown position level '" + std::string(name) + "'");
}

const std::string& PositionScale::name_of(int level) const {
  if (level < 0 || level >= size()) throw Error(Errc::InvalidAxis, "position level out of range");
  return levels[static_cast<std::size_t>(level)];
}

std::string ValidationReport::summary() const {
  if (findings.empty()) return "valid";
  std::string out;
  for (const auto& f : findings) {
    if (!out.empty()) out += "; ";
    out += f.message;
  }
  return out;
}

ValidationReport validate_trace(const MetricTrace& trace) {
  ValidationReport report;
  const auto& s = trace.samples;
  auto add = [&](std::size_t i, std::string msg) {
    report.findings.push_back({i, std::move(msg) + " at index " + std::to_string(i)});
  };
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!std::isfinite(s[i].t)) {
      add(i, "non-finite timestamp");
    } else if (s[i].t < 0.0) {
      add(i, "negative timestamp");
    }
    if (!std::isfinite(s[i].value)) add(i, "non-finite value");
    if (i > 0 && std::isfinite(s[i].t) && std::isfinite(s[i - 1].t)) {
      if (s[i].t == s[i - 1].t) {
        add(i, "duplicate timestamp");
      } else if (s[i].t < s[i - 1].t) {
        add(i, "non-monotonic");
      }
    }
  }
  if (s.size() < 2) {
    report.findings.push_back(
        {0, "too few samples (" + std::to_string(s.size()) + ", need at least 2)"});
  }
  return report;
}

std::vector<PhaseInterval> pair_phase_events(const std::vector<PhaseEvent>& events) {
  for (std::size_t i = 1; i < events.size(); ++i) {
    if (events[i].t < events[i - 1].t) {
      throw Error(Errc::InvalidArgument, "phase events must be sorted by time");
    }
  }

  std::map<std::pair<std::string, int>, double> open;
  std::vector<PhaseInterval> intervals;
  for (const auto& e : events) {
    const auto key = std::make_pair(e.phase_type, e.instance_id);
    const std::string where = e.phase_type + "#" + std::to_string(e.instance_id);
    if (e.boundary == Boundary::Start) {
      if (!open.emplace(key, e.t).second) {
        throw Error(Errc::UnmatchedEvent, "second start without end for " + where);
      }
      continue;
    }
    auto it = open.find(key);
    if (it == open.end()) throw Error(Errc::UnmatchedEvent, "end without start for " + where);
    if (!(e.t > it->second)) throw Error(Errc::UnmatchedEvent, "end not after start for " + where);
    intervals.push_back({e.phase_type, e.instance_id, it->second, e.t, 0, std::nullopt});
    open.erase(it);
  }
  if (!open.empty()) {
    const auto& [key, t] = *open.begin();
    throw Error(Errc::UnmatchedEvent,
                "start without end for " + key.first + "#" + std::to_string(key.second));
  }

  std::sort(intervals.begin(), intervals.end(), [](const PhaseInterval& a, const PhaseInterval& b) {
    if (a.t_start != b.t_start) return a.t_start < b.t_start;
    if (a.t_end != b.t_end) return a.t_end > b.t_end;
    if (a.phase_type != b.phase_type) return a.phase_type < b.phase_type;
    return a.instance_id < b.instance_id;
  });

  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    auto& cur = intervals[i];
    while (!stack.empty() && intervals[stack.back()].t_end <= cur.t_start) stack.pop_back();
    if (!stack.empty()) {
      const auto& enclosing = intervals[stack.back()];
      if (cur.t_end > enclosing.t_end) {
        throw Error(Errc::NestingViolation, cur.phase_type + "#" + std::to_string(cur.instance_id) +
                                                " partially overlaps " + enclosing.phase_type + "#" +
                                                std::to_string(enclosing.instance_id));
      }
      if (enclosing.phase_type == cur.phase_type) {
        throw Error(Errc::NestingViolation,
                    "overlapping instances of phase type " + cur.phase_type);
      }
      cur.parent = stack.back();
      cur.depth = enclosing.depth + 1;
    }
    stack.push_back(i);
  }

  // A phase type is either always nested or never nested.
  std::map<std::string, std::pair<bool, bool>> nesting;  // (seen at top level, seen nested)
  for (const auto& iv : intervals) {
    auto& [top, nested] = nesting[iv.phase_type];
    (iv.parent ? nested : top) = true;
  }
  for (const auto& [type, flags] : nesting) {
    if (flags.first && flags.second) {
      throw Error(Errc::NestingViolation,
                  "phase type " + type + " appears both inside and outside enclosing phases");
    }
  }
  return intervals;
}

std::vector<std::string> outermost_phase_types(const std::vector<PhaseInterval>& intervals) {
  std::vector<std::string> out;
  for (const auto& iv : intervals) {
    if (iv.depth == 0 && std::find(out.begin(), out.end(), iv.phase_type) == out.end()) {
      out.push_back(iv.phase_type);
    }
  }
  return out;
}

}  // namespace infopos

#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace infopos {

enum class MetricKind { Current, Power, Energy, Voltage };

std::string_view to_string(MetricKind kind) noexcept;
MetricKind parse_metric(std::string_view name);
// Voltage traces ingest fine but are not part of the default analysis set.
constexpr bool is_default_metric(MetricKind kind) noexcept { return kind != MetricKind::Voltage; }

using Label = std::string;
inline constexpr std::string_view kNormalLabel = "Normal";

// Closed set of behaviour classes for one experiment. Order is significant:
// it is the class order used for tie-breaking in the classifiers.
struct LabelSet {
  std::vector<Label> names{"Normal", "NoFan", "UnderVolt"};

  bool contains(std::string_view label) const;
  // Throws InvalidArgument when Normal is missing or names repeat.
  void validate() const;
};

struct Sample {
  double t = 0.0;      // seconds since run start
  double value = 0.0;  // metric units
  bool operator==(const Sample&) const = default;
};

struct MetricTrace {
  std::string scenario_id;
  MetricKind metric = MetricKind::Current;
  std::vector<Sample> samples;
  Label label;
  double time_origin = 0.0;  // absolute time of the first sample before rebasing
};

enum class Boundary { Start, End };

struct PhaseEvent {
  double t = 0.0;
  std::string phase_type;
  Boundary boundary = Boundary::Start;
  int instance_id = 0;
  bool operator==(const PhaseEvent&) const = default;
};

struct PhaseInterval {
  std::string phase_type;
  int instance_id = 0;
  double t_start = 0.0;
  double t_end = 0.0;
  int depth = 0;                      // 0 for outermost phases
  std::optional<std::size_t> parent;  // index of the innermost enclosing interval
  bool operator==(const PhaseInterval&) const = default;
};

enum class CutKind { Full, Ini, Mid, End };
inline constexpr CutKind kAllCuts[] = {CutKind::Full, CutKind::Ini, CutKind::Mid, CutKind::End};

std::string_view to_string(CutKind cut) noexcept;
CutKind parse_cut(std::string_view name);

struct Segment {
  std::string scenario_id;
  MetricKind metric = MetricKind::Current;
  std::string phase_type;
  CutKind cut = CutKind::Full;
  Label label;
  int instance_id = 0;
  std::vector<Sample> samples;
  double t_start = 0.0;
  double t_end = 0.0;

  double duration() const { return t_end - t_start; }
  bool operator==(const Segment&) const = default;
};

// Ordered level names of one InfoPos dimension, lowest first.
struct PositionScale {
  std::vector<std::string> levels{"Poor", "Moderate", "Rich"};

  int size() const { return static_cast<int>(levels.size()); }
  int index_of(std::string_view name) const;  // throws InvalidAxis
  const std::string& name_of(int level) const;
  int richest() const { return size() - 1; }
};

struct KnowledgePosition {
  int level = 0;
  auto operator<=>(const KnowledgePosition&) const = default;
};

struct DataPosition {
  int level = 0;
  auto operator<=>(const DataPosition&) const = default;
};

struct InfoPosition {
  KnowledgePosition knowledge;
  DataPosition data;
  auto operator<=>(const InfoPosition&) const = default;
};

struct ValidationFinding {
  std::size_t index = 0;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationFinding> findings;
  bool valid() const { return findings.empty(); }
  std::string summary() const;
};

ValidationReport validate_trace(const MetricTrace& trace);

// Matches Start/End events into intervals and checks that they form a proper
// nesting (every pair of intervals is disjoint or one contains the other;
// instances of one phase type never overlap). Output is sorted by start time,
// enclosing intervals before the ones they contain.
// Throws UnmatchedEvent or NestingViolation.
std::vector<PhaseInterval> pair_phase_events(const std::vector<PhaseEvent>& events);

// Phase types that never appear inside another interval.
std::vector<std::string> outermost_phase_types(const std::vector<PhaseInterval>& intervals);

}  // namespace infopos

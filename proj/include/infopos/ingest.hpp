#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "infopos/trace_core.hpp"

namespace infopos {

// Trace CSV: header `t,value`, one sample per LF-terminated row.
// The header line is optional on read. Timestamps are rebased so the first
// sample sits at t = 0; the original offset is kept in `time_origin`.
// Throws ParseError (with 1-based line number) or ValidationError.
MetricTrace read_trace_csv(const std::filesystem::path& path, MetricKind metric,
                           const std::string& scenario_id = {}, const Label& label = {});
std::string format_trace_csv(const std::vector<Sample>& samples);
void write_trace_csv(const std::vector<Sample>& samples, const std::filesystem::path& path);

// Event CSV: header `t,phase_type,boundary,instance`, boundary in {start,end}.
// Rows come back stably sorted by t, shifted by -time_origin.
std::vector<PhaseEvent> read_phase_events_csv(const std::filesystem::path& path,
                                              double time_origin = 0.0);
std::string format_phase_events_csv(const std::vector<PhaseEvent>& events);
void write_phase_events_csv(const std::vector<PhaseEvent>& events,
                            const std::filesystem::path& path);

// Maps a foreign delimited file (e.g. a logger export) onto the canonical
// trace schema.
struct ColumnMapping {
  std::string time_column = "t";
  std::string value_column = "value";
  char delimiter = ',';
  double time_scale = 1.0;  // multiply raw time by this to get seconds
  int skip_lines = 0;       // lines before the header row
};

MetricTrace read_trace_mapped(const std::filesystem::path& path, const ColumnMapping& mapping,
                              MetricKind metric, const std::string& scenario_id = {},
                              const Label& label = {});

struct ScenarioMeta {
  std::string scenario_id;
  std::string input_batch;
  std::string core_type;
  int repetition_count = 1;
  Label label;
  std::map<MetricKind, std::filesystem::path> traces;
  std::filesystem::path events;
};

// Catalog: a JSON document
//   { "format": "infopos-catalog", "version": 1,
//     "scenarios": [ { "scenario_id", "input_batch", "core_type",
//                      "repetition_count", "label",
//                      "traces": { "<metric>": "<path>", ... },
//                      "events": "<path>" }, ... ] }
// Relative paths resolve against the catalog's directory.
// Throws MissingFile, DuplicateScenario, ParseError.
std::vector<ScenarioMeta> load_catalog(const std::filesystem::path& path);
void write_catalog(const std::vector<ScenarioMeta>& scenarios, const std::filesystem::path& path);

struct ScenarioRun {
  ScenarioMeta meta;
  std::vector<MetricTrace> traces;
  std::vector<PhaseInterval> intervals;

  const MetricTrace* trace(MetricKind metric) const;
};

struct Corpus {
  std::vector<ScenarioRun> runs;
};

// Reads every trace and event log of a scenario, aligned on a common time base.
ScenarioRun load_scenario(const ScenarioMeta& meta);
Corpus load_corpus(const std::filesystem::path& catalog_path);

}  // namespace infopos

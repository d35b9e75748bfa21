#include "infopos/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <limits>
#include <set>

#include "infopos/error.hpp"
#include "infopos/text.hpp"

namespace infopos {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool looks_like_header(std::string_view first_field) {
  return !text::parse_double(first_field).has_value();
}

MetricTrace finish_trace(std::vector<Sample> samples, MetricKind metric,
                         const std::string& scenario_id, const Label& label,
                         const fs::path& path) {
  MetricTrace trace;
  trace.scenario_id = scenario_id;
  trace.metric = metric;
  trace.label = label;
  if (!samples.empty()) {
    trace.time_origin = samples.front().t;
    for (auto& s : samples) s.t -= trace.time_origin;
  }
  trace.samples = std::move(samples);
  const auto report = validate_trace(trace);
  if (!report.valid()) {
    throw Error(Errc::ValidationError, path.string() + ": " + report.summary());
  }
  return trace;
}

Boundary parse_boundary(std::string_view s, std::size_t line) {
  std::string v(text::trim(s));
  std::transform(v.begin(), v.end(), v.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (v == "start") return Boundary::Start;
  if (v == "end") return Boundary::End;
  throw Error(Errc::UnknownBoundary,
              "line " + std::to_string(line) + ": boundary '" + v + "' is not start/end");
}

}  // namespace

MetricTrace read_trace_csv(const fs::path& path, MetricKind metric, const std::string& scenario_id,
                           const Label& label) {
  const auto lines = text::read_lines(path);
  std::vector<Sample> samples;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    if (text::trim(lines[i]).empty()) continue;
    const auto fields = text::split(lines[i]);
    if (i == 0 && looks_like_header(fields[0])) {
      if (fields.size() != 2 || text::trim(fields[0]) != "t" || text::trim(fields[1]) != "value") {
        throw ParseError(line_no, "expected header 't,value'");
      }
      continue;
    }
    if (fields.size() != 2) throw ParseError(line_no, "expected 2 columns");
    const auto t = text::parse_double(fields[0]);
    if (!t) throw ParseError(line_no, "bad time '" + std::string(fields[0]) + "'");
    const auto v = text::parse_double(fields[1]);
    if (!v) throw ParseError(line_no, "bad value '" + std::string(fields[1]) + "'");
    samples.push_back({*t, *v});
  }
  return finish_trace(std::move(samples), metric, scenario_id, label, path);
}

std::string format_trace_csv(const std::vector<Sample>& samples) {
  std::string out = "t,value\n";
  for (const auto& s : samples) {
    out += text::format_double(s.t);
    out += ',';
    out += text::format_double(s.value);
    out += '\n';
  }
  return out;
}

void write_trace_csv(const std::vector<Sample>& samples, const fs::path& path) {
  text::write_file(path, format_trace_csv(samples));
}

std::vector<PhaseEvent> read_phase_events_csv(const fs::path& path, double time_origin) {
  const auto lines = text::read_lines(path);
  std::vector<PhaseEvent> events;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    if (text::trim(lines[i]).empty()) continue;
    const auto fields = text::split(lines[i]);
    if (i == 0 && looks_like_header(fields[0])) {
      if (fields.size() != 4 || text::trim(fields[0]) != "t" ||
          text::trim(fields[1]) != "phase_type" || text::trim(fields[2]) != "boundary" ||
          text::trim(fields[3]) != "instance") {
        throw ParseError(line_no, "expected header 't,phase_type,boundary,instance'");
      }
      continue;
    }
    if (fields.size() != 4) throw ParseError(line_no, "expected 4 columns");
    const auto t = text::parse_double(fields[0]);
    if (!t || !std::isfinite(*t)) throw ParseError(line_no, "bad time '" + std::string(fields[0]) + "'");
    const auto phase = text::trim(fields[1]);
    if (phase.empty()) throw ParseError(line_no, "empty phase_type");
    const Boundary boundary = parse_boundary(fields[2], line_no);
    const auto instance = text::parse_int(fields[3]);
    if (!instance || *instance < std::numeric_limits<int>::min() ||
        *instance > std::numeric_limits<int>::max()) {
      throw ParseError(line_no, "bad instance '" + std::string(fields[3]) + "'");
    }
    events.push_back({*t - time_origin, std::string(phase), boundary, static_cast<int>(*instance)});
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const PhaseEvent& a, const PhaseEvent& b) { return a.t < b.t; });
  return events;
}

std::string format_phase_events_csv(const std::vector<PhaseEvent>& events) {
  std::string out = "t,phase_type,boundary,instance\n";
  for (const auto& e : events) {
    out += text::format_double(e.t);
    out += ',';
    out += e.phase_type;
    out += e.boundary == Boundary::Start ? ",start," : ",end,";
    out += std::to_string(e.instance_id);
    out += '\n';
  }
  return out;
}

void write_phase_events_csv(const std::vector<PhaseEvent>& events, const fs::path& path) {
  text::write_file(path, format_phase_events_csv(events));
}

MetricTrace read_trace_mapped(const fs::path& path, const ColumnMapping& mapping,
                              MetricKind metric, const std::string& scenario_id,
                              const Label& label) {
  const auto lines = text::read_lines(path);
  const auto header_at = static_cast<std::size_t>(std::max(0, mapping.skip_lines));
  if (lines.size() <= header_at) throw ParseError(header_at + 1, "missing header row");

  const auto header = text::split(lines[header_at], mapping.delimiter);
  std::optional<std::size_t> t_col, v_col;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto name = text::trim(header[c]);
    if (name == mapping.time_column) t_col = c;
    if (name == mapping.value_column) v_col = c;
  }
  if (!t_col || !v_col) {
    throw ParseError(header_at + 1, "columns '" + mapping.time_column + "'/'" +
                                        mapping.value_column + "' not in header");
  }

  std::vector<Sample> samples;
  for (std::size_t i = header_at + 1; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty()) continue;
    const auto fields = text::split(lines[i], mapping.delimiter);
    if (fields.size() <= std::max(*t_col, *v_col)) throw ParseError(i + 1, "too few columns");
    const auto t = text::parse_double(fields[*t_col]);
    const auto v = text::parse_double(fields[*v_col]);
    if (!t || !v) throw ParseError(i + 1, "non-numeric field");
    samples.push_back({*t * mapping.time_scale, *v});
  }
  return finish_trace(std::move(samples), metric, scenario_id, label, path);
}

std::vector<ScenarioMeta> load_catalog(const fs::path& path) {
  json doc;
  try {
    doc = json::parse(text::read_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError(0, path.string() + ": " + e.what());
  }
  const fs::path base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    fs::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  };

  std::vector<ScenarioMeta> out;
  std::set<std::string> ids;
  try {
    for (const auto& entry : doc.at("scenarios")) {
      ScenarioMeta meta;
      meta.scenario_id = entry.at("scenario_id").get<std::string>();
      meta.input_batch = entry.value("input_batch", "");
      meta.core_type = entry.value("core_type", "");
      meta.repetition_count = entry.value("repetition_count", 1);
      meta.label = entry.at("label").get<std::string>();
      for (const auto& [metric, file] : entry.at("traces").items()) {
        meta.traces[parse_metric(metric)] = resolve(file.get<std::string>());
      }
      meta.events = resolve(entry.at("events").get<std::string>());

      if (!ids.insert(meta.scenario_id).second) {
        throw Error(Errc::DuplicateScenario, meta.scenario_id);
      }
      for (const auto& [metric, file] : meta.traces) {
        if (!fs::exists(file)) throw Error(Errc::MissingFile, file.string());
      }
      if (!fs::exists(meta.events)) throw Error(Errc::MissingFile, meta.events.string());
      out.push_back(std::move(meta));
    }
  } catch (const json::exception& e) {
    throw ParseError(0, path.string() + ": " + e.what());
  }
  return out;
}

void write_catalog(const std::vector<ScenarioMeta>& scenarios, const fs::path& path) {
  const fs::path base = path.parent_path();
  auto relative = [&](const fs::path& p) {
    return base.empty() ? p.generic_string() : p.lexically_relative(base).generic_string();
  };
  json list = json::array();
  for (const auto& s : scenarios) {
    json traces = json::object();
    for (const auto& [metric, file] : s.traces) traces[std::string(to_string(metric))] = relative(file);
    list.push_back({{"scenario_id", s.scenario_id},
                    {"input_batch", s.input_batch},
                    {"core_type", s.core_type},
                    {"repetition_count", s.repetition_count},
                    {"label", s.label},
                    {"traces", traces},
                    {"events", relative(s.events)}});
  }
  json doc = {{"format", "infopos-catalog"}, {"version", 1}, {"scenarios", list}};
  text::write_file(path, doc.dump(2) + "\n");
}

const MetricTrace* ScenarioRun::trace(MetricKind metric) const {
  for (const auto& t : traces) {
    if (t.metric == metric) return &t;
  }
  return nullptr;
}

ScenarioRun load_scenario(const ScenarioMeta& meta) {
  ScenarioRun run;
  run.meta = meta;
  double origin = std::numeric_limits<double>::infinity();
  for (const auto& [metric, file] : meta.traces) {
    run.traces.push_back(read_trace_csv(file, metric, meta.scenario_id, meta.label));
    origin = std::min(origin, run.traces.back().time_origin);
  }
  if (run.traces.empty()) throw Error(Errc::MissingFile, meta.scenario_id + ": no traces listed");
  // Traces of one scenario share the time base of the earliest one.
  for (auto& trace : run.traces) {
    const double shift = trace.time_origin - origin;
    for (auto& s : trace.samples) s.t += shift;
    trace.time_origin = origin;
  }
  run.intervals = pair_phase_events(read_phase_events_csv(meta.events, origin));
  return run;
}

Corpus load_corpus(const fs::path& catalog_path) {
  Corpus corpus;
  for (const auto& meta : load_catalog(catalog_path)) corpus.runs.push_back(load_scenario(meta));
  return corpus;
}

}  // namespace infopos

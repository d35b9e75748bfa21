#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "infopos/degrade.hpp"
#include "infopos/features.hpp"
#include "infopos/ingest.hpp"
#include "infopos/ml.hpp"
#include "infopos/passport.hpp"
#include "infopos/segmentation.hpp"
#include "infopos/synth.hpp"

namespace infopos::sweep {

enum class CvMode { Stratified, Grouped };

struct SweepConfig {
  // Corpus source: a catalog file, or a synthetic corpus spec.
  std::filesystem::path catalog;
  std::optional<CorpusSpec> synth;

  LabelSet labels;
  PositionScale knowledge_scale;
  PositionScale data_scale;

  std::vector<std::string> knowledge;  // knowledge level names to sweep
  std::vector<std::string> selectors;  // "cycle-op", "image-op + neural-op", "all", ...
  std::vector<CutKind> cuts{CutKind::Full, CutKind::Ini, CutKind::Mid, CutKind::End};
  std::vector<int> degrees{1, 2};
  std::vector<MetricKind> metrics{MetricKind::Current};
  std::vector<ml::Algorithm> algorithms{ml::Algorithm::BDT, ml::Algorithm::DT, ml::Algorithm::ET,
                                        ml::Algorithm::RF};
  // One plan per data-position row; a plan's `position` names its level
  // (empty = richest).
  std::vector<DegradationPlan> data_positions;

  ml::MlConfig ml;
  int folds = 3;
  CvMode cv_mode = CvMode::Stratified;
  double threshold = 0.99;
  std::uint64_t seed = 0;
  int workers = 0;  // 0 = OpenMP default

  // Optional phase hierarchy; derived from the corpus when empty.
  PhaseDepths phases;
};

// JSON config. Relative catalog paths resolve against `base_dir`.
// Throws ParseError, InvalidAxis, InvalidArgument.
SweepConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
SweepConfig read_config(const std::filesystem::path& path);
std::string config_to_json(const SweepConfig& config);

Corpus load_sweep_corpus(const SweepConfig& config);

// Union of the phase depths of all runs. Throws NestingViolation when one
// phase type sits at different depths in different runs.
PhaseDepths corpus_phase_depths(const Corpus& corpus);

struct SweepCase {
  int knowledge = 0;  // level index in the knowledge scale
  std::string knowledge_name;
  int data = 0;  // level index in the data scale
  std::string data_name;
  std::size_t plan_index = 0;  // into SweepConfig::data_positions
  std::string plan_name;
  std::string selector;
  CutKind cut = CutKind::Full;
  int degree = 1;
  MetricKind metric = MetricKind::Current;
  ml::Algorithm algorithm = ml::Algorithm::DT;
  std::uint64_t seed = 0;  // CV seed; identical for every algorithm on one dataset

  std::string id() const;
  InfoPosition position() const { return {{knowledge}, {data}}; }
};

// Cartesian product of the configured axes in declaration order, keeping
// the selectors each knowledge level may see. Throws InvalidAxis on an
// empty axis or unknown level name.
std::vector<SweepCase> enumerate_cases(const SweepConfig& config, const PhaseDepths& depths);

// Mean passports of the undegraded Normal segments for every phase type,
// cut, degree and metric the cases need.
PassportStore build_passport_store(const SweepConfig& config, const Corpus& corpus,
                                   const std::vector<SweepCase>& cases, const PhaseDepths& depths);

// Feature dataset of one case: informed cut, degradation of the Full
// segments, quartile cut, fit, features against the passports.
Dataset build_case_dataset(const SweepCase& c, const SweepConfig& config, const Corpus& corpus,
                           const PassportStore& passports, const PhaseDepths& depths);

struct CaseResult {
  SweepCase sweep_case;
  ml::FoldStats stats;
  std::size_t rows = 0;
  double wall_seconds = 0.0;  // not persisted in the results file
};

struct CaseFailure {
  SweepCase sweep_case;
  std::string message;
};

// Pipeline errors come back as Error with the case id prefixed.
CaseResult run_case(const SweepCase& c, const SweepConfig& config, const Corpus& corpus,
                    const PassportStore& passports, const PhaseDepths& depths);

struct SweepOutcome {
  std::vector<CaseResult> results;   // enumeration order
  std::vector<CaseFailure> failures;  // enumeration order
};

using ProgressLog = std::function<void(const std::string& line)>;

// Parallel over datasets, then over cases. Results do not depend on the
// worker count.
SweepOutcome run_sweep(const SweepConfig& config, const Corpus& corpus, const ProgressLog& log = {});
SweepOutcome run_sweep_serial(const SweepConfig& config, const Corpus& corpus, const ProgressLog& log = {});

// ---- persisted results ----

// One row per case, sorted by the case axes; wall time is left out so
// the file depends only on config, corpus and seeds.
std::string format_results_csv(const std::vector<CaseResult>& results);
std::vector<CaseResult> parse_results_csv(const std::string& contents);
std::string format_timings_csv(const std::vector<CaseResult>& results);
std::string format_failures_csv(const std::vector<CaseFailure>& failures);

// ---- reports ----

struct TableRow {
  std::string knowledge;
  std::string data;
  std::string selector;
  int degree = 1;
  MetricKind metric = MetricKind::Current;
  std::vector<std::optional<ml::FoldStats>> cells;  // one per report algorithm
  std::vector<bool> top;
};

struct CutTable {
  CutKind cut = CutKind::Full;
  std::vector<TableRow> rows;
};

struct RankReport {
  double threshold = 0.99;
  std::vector<std::string> algorithms;
  std::vector<CutTable> tables;                    // cut order
  std::vector<CaseResult> flagged;                 // mean accuracy >= threshold
  std::map<int, CaseResult> best_by_knowledge;     // keyed by knowledge level
};

RankReport rank_and_report(const std::vector<CaseResult>& results, double threshold);
std::string render_table_csv(const RankReport& report, const CutTable& table);
std::string render_report_text(const RankReport& report, const PositionScale& knowledge_scale);

struct CoverageCell {
  std::size_t cases = 0;
  std::optional<double> best_accuracy;
};

struct CoverageGrid {
  PositionScale knowledge_scale;
  PositionScale data_scale;
  std::vector<std::vector<CoverageCell>> cells;  // [data level][knowledge level]

  const CoverageCell& at(InfoPosition p) const {
    return cells[static_cast<std::size_t>(p.data.level)][static_cast<std::size_t>(p.knowledge.level)];
  }
};

CoverageGrid matrix_coverage(const std::vector<CaseResult>& results, const PositionScale& knowledge_scale,
                             const PositionScale& data_scale);
// Richest data level on the bottom row, knowledge growing to the right.
std::string render_coverage_text(const CoverageGrid& grid);
std::string render_coverage_csv(const CoverageGrid& grid);

// Per-cut report CSVs, report.txt, coverage.txt and coverage.csv.
void write_reports(const std::vector<CaseResult>& results, double threshold, const PositionScale& knowledge_scale,
                   const PositionScale& data_scale, const std::filesystem::path& out_dir);

}  // namespace infopos::sweep

#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "infopos/passport.hpp"
#include "infopos/trace_core.hpp"

namespace infopos {

struct GoodnessOfFit {
  double r2 = 1.0;
  double rmse = 0.0;
};

inline constexpr double kDefaultR2Floor = -1e6;

// Goodness of fit of a segment against a curve over normalized time.
// Residual and total sums of squares below the round-off level of the data
// (1e-12 of its magnitude per sample) count as exactly zero. With SS_tot = 0
// r2 is 1 for an exact fit and `r2_floor` otherwise; r2 never drops below
// the floor. Throws TooFewSamples.
GoodnessOfFit gof(const Segment& segment, const RegressionSignature& curve,
                  double r2_floor = kDefaultR2Floor);

struct RowProvenance {
  std::string scenario_id;
  std::string phase_type;
  CutKind cut = CutKind::Full;
  MetricKind metric = MetricKind::Current;
  int degree = 1;
  int instance_id = 0;

  bool operator==(const RowProvenance&) const = default;
};

inline constexpr std::size_t kFeatureCount = 8;
inline constexpr std::array<std::string_view, kFeatureCount + 1> kDatasetColumns{
    "execution_time", "coefficient_2", "coefficient_1",      "intercept", "R2",
    "R2_absolute_diff", "RMSE",        "RMSE_absolute_diff", "label"};

struct FeatureRow {
  double execution_time = 0.0;
  double coefficient_2 = 0.0;
  double coefficient_1 = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double r2_absolute_diff = 0.0;
  double rmse = 0.0;
  double rmse_absolute_diff = 0.0;
  Label label;
  RowProvenance provenance;  // in memory only; not part of the CSV schema

  std::array<double, kFeatureCount> features() const {
    return {execution_time, coefficient_2, coefficient_1, intercept,
            r2,             r2_absolute_diff, rmse,       rmse_absolute_diff};
  }
  bool operator==(const FeatureRow&) const = default;
};

// Features of `segment`: its own fit plus the diversion of its goodness of
// fit from that of the passport curve. Throws KeyMismatch.
FeatureRow extract_row(const Segment& segment, const RegressionSignature& own_fit,
                       const Passport& passport, double r2_floor = kDefaultR2Floor);

struct Dataset {
  static constexpr int kSchemaVersion = 1;

  int schema_version = kSchemaVersion;
  std::vector<FeatureRow> rows;
  std::map<Label, std::size_t> class_counts;

  bool operator==(const Dataset&) const = default;
};

// Throws EmptyDataset, or SchemaMismatch when rows mix metric, degree or cut.
Dataset assemble_dataset(std::vector<FeatureRow> rows);
Dataset concat_datasets(const Dataset& a, const Dataset& b);

std::string format_dataset_csv(const Dataset& dataset);
Dataset parse_dataset_csv(const std::string& contents);
void write_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset read_dataset(const std::filesystem::path& path);

}  // namespace infopos

#include "infopos/features.hpp"

#include <algorithm>
#include <cmath>

#include "infopos/error.hpp"
#include "infopos/text.hpp"

namespace infopos {

GoodnessOfFit gof(const Segment& segment, const RegressionSignature& curve, double r2_floor) {
  const std::size_t n = segment.samples.size();
  if (n < 2) throw Error(Errc::TooFewSamples, "goodness of fit needs at least 2 samples");

  const auto u = normalized_time(segment);
  double mean = 0.0;
  double scale = 0.0;
  std::vector<double> predicted(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double y = segment.samples[i].value;
    predicted[i] = evaluate_signature(curve, u[i]);
    mean += y;
    scale = std::max({scale, std::abs(y), std::abs(predicted[i])});
  }
  mean /= static_cast<double>(n);

  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double y = segment.samples[i].value;
    ss_res += (y - predicted[i]) * (y - predicted[i]);
    ss_tot += (y - mean) * (y - mean);
  }
  const double noise_floor = static_cast<double>(n) * std::pow(1e-12 * scale, 2);
  if (ss_res <= noise_floor) ss_res = 0.0;
  if (ss_tot <= noise_floor) ss_tot = 0.0;

  GoodnessOfFit out;
  out.rmse = std::sqrt(ss_res / static_cast<double>(n));
  if (ss_tot == 0.0) {
    out.r2 = ss_res == 0.0 ? 1.0 : r2_floor;
  } else {
    out.r2 = std::max(1.0 - ss_res / ss_tot, r2_floor);
  }
  return out;
}

FeatureRow extract_row(const Segment& segment, const RegressionSignature& own_fit,
                       const Passport& passport, double r2_floor) {
  const PassportKey key = key_of(segment, own_fit.degree);
  if (passport.key != key) {
    throw Error(Errc::KeyMismatch, "passport " + passport.key.to_string() + " for segment " + key.to_string());
  }
  const GoodnessOfFit own = gof(segment, own_fit, r2_floor);
  const GoodnessOfFit ref = gof(segment, passport.signature, r2_floor);

  FeatureRow row;
  row.execution_time = own_fit.execution_time;
  row.coefficient_2 = own_fit.degree == 2 ? own_fit.coefficient_2 : 0.0;
  row.coefficient_1 = own_fit.coefficient_1;
  row.intercept = own_fit.intercept;
  row.r2 = own.r2;
  row.r2_absolute_diff = std::abs(own.r2 - ref.r2);
  row.rmse = own.rmse;
  row.rmse_absolute_diff = std::abs(own.rmse - ref.rmse);
  row.label = segment.label;
  row.provenance = {segment.scenario_id, segment.phase_type, segment.cut,
                    segment.metric,      own_fit.degree,     segment.instance_id};
  for (double f : row.features()) {
    if (!std::isfinite(f)) throw Error(Errc::InvalidArgument, "non-finite feature for " + key.to_string());
  }
  return row;
}

namespace {

std::map<Label, std::size_t> count_classes(const std::vector<FeatureRow>& rows) {
  std::map<Label, std::size_t> counts;
  for (const auto& r : rows) ++counts[r.label];
  return counts;
}

}  // namespace

Dataset assemble_dataset(std::vector<FeatureRow> rows) {
  if (rows.empty()) throw Error(Errc::EmptyDataset, "no feature rows");
  const auto& first = rows.front().provenance;
  for (const auto& r : rows) {
    const auto& p = r.provenance;
    if (p.metric != first.metric || p.degree != first.degree || p.cut != first.cut) {
      throw Error(Errc::SchemaMismatch, "dataset rows mix metric, degree or cut");
    }
  }
  Dataset ds;
  ds.class_counts = count_classes(rows);
  ds.rows = std::move(rows);
  return ds;
}

Dataset concat_datasets(const Dataset& a, const Dataset& b) {
  if (a.schema_version != b.schema_version) throw Error(Errc::SchemaMismatch, "schema versions differ");
  std::vector<FeatureRow> rows = a.rows;
  rows.insert(rows.end(), b.rows.begin(), b.rows.end());
  return assemble_dataset(std::move(rows));
}

std::string format_dataset_csv(const Dataset& dataset) {
  std::string out;
  for (std::size_t i = 0; i < kDatasetColumns.size(); ++i) {
    if (i > 0) out += ',';
    out += kDatasetColumns[i];
  }
  out += '\n';
  for (const auto& row : dataset.rows) {
    for (double f : row.features()) {
      out += text::format_double(f);
      out += ',';
    }
    out += row.label;
    out += '\n';
  }
  return out;
}

Dataset parse_dataset_csv(const std::string& contents) {
  std::vector<FeatureRow> rows;
  std::size_t line_no = 0;
  std::size_t start = 0;
  bool header_seen = false;
  while (start < contents.size()) {
    std::size_t end = contents.find('\n', start);
    if (end == std::string::npos) end = contents.size();
    const std::string_view line = text::trim(std::string_view(contents).substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (line.empty()) continue;
    const auto fields = text::split(line);
    if (!header_seen) {
      if (fields.size() != kDatasetColumns.size()) throw Error(Errc::SchemaMismatch, "dataset header width");
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (text::trim(fields[i]) != kDatasetColumns[i]) {
          throw Error(Errc::SchemaMismatch, "unexpected dataset column '" + std::string(fields[i]) + "'");
        }
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != kDatasetColumns.size()) throw ParseError(line_no, "expected 9 columns");
    std::array<double, kFeatureCount> f{};
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
      const auto v = text::parse_double(fields[i]);
      if (!v) throw ParseError(line_no, "bad number '" + std::string(fields[i]) + "'");
      f[i] = *v;
    }
    FeatureRow row;
    row.execution_time = f[0];
    row.coefficient_2 = f[1];
    row.coefficient_1 = f[2];
    row.intercept = f[3];
    row.r2 = f[4];
    row.r2_absolute_diff = f[5];
    row.rmse = f[6];
    row.rmse_absolute_diff = f[7];
    row.label = std::string(text::trim(fields[8]));
    if (row.label.empty()) throw ParseError(line_no, "empty label");
    rows.push_back(std::move(row));
  }
  if (!header_seen) throw Error(Errc::SchemaMismatch, "missing dataset header");
  return assemble_dataset(std::move(rows));
}

void write_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  text::write_file(path, format_dataset_csv(dataset));
}

Dataset read_dataset(const std::filesystem::path& path) { return parse_dataset_csv(text::read_file(path)); }

}  // namespace infopos

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>
#include <tuple>

#include "infopos/error.hpp"
#include "infopos/sweep.hpp"
#include "infopos/text.hpp"

namespace infopos::sweep {

namespace {

constexpr std::string_view kResultsHeader =
    "knowledge,knowledge_level,data,data_level,plan,selector,cut,degree,metric,algorithm,seed,rows,"
    "mean_accuracy,mean_f1,cv_percent,fold_accuracies,fold_f1s";

auto axis_tuple(const SweepCase& c) {
  return std::make_tuple(c.knowledge, c.data, c.plan_name, c.selector, c.cut, c.degree, c.metric, c.algorithm);
}

std::vector<const CaseResult*> sorted(const std::vector<CaseResult>& results) {
  std::vector<const CaseResult*> out;
  for (const auto& r : results) out.push_back(&r);
  std::stable_sort(out.begin(), out.end(), [](const CaseResult* a, const CaseResult* b) {
    return axis_tuple(a->sweep_case) < axis_tuple(b->sweep_case);
  });
  return out;
}

std::string join_doubles(const std::vector<double>& v) {
  std::vector<std::string> parts;
  for (double x : v) parts.push_back(text::format_double(x));
  return text::join(parts, ";");
}

std::vector<double> split_doubles(std::string_view field, std::size_t line) {
  std::vector<double> out;
  if (field.empty()) return out;
  for (auto part : text::split(field, ';')) {
    const auto v = text::parse_double(part);
    if (!v) throw ParseError(line, "bad number '" + std::string(part) + "'");
    out.push_back(*v);
  }
  return out;
}

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

std::string percent(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", x * 100.0);
  return buf;
}

std::string fixed2(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

std::string signature_name(int degree) {
  if (degree == 1) return "linear";
  if (degree == 2) return "quadratic";
  return "deg" + std::to_string(degree);
}

std::string data_label(const SweepCase& c) { return c.data_name + ":" + c.plan_name; }

}  // namespace

std::string format_results_csv(const std::vector<CaseResult>& results) {
  std::string out(kResultsHeader);
  out += '\n';
  for (const auto* r : sorted(results)) {
    const auto& c = r->sweep_case;
    const auto& s = r->stats;
    out += c.knowledge_name + ',' + std::to_string(c.knowledge) + ',' + c.data_name + ',' + std::to_string(c.data) +
           ',' + c.plan_name + ',' + c.selector + ',' + std::string(to_string(c.cut)) + ',' +
           std::to_string(c.degree) + ',' + std::string(to_string(c.metric)) + ',' +
           std::string(ml::to_string(c.algorithm)) + ',' + std::to_string(c.seed) + ',' + std::to_string(r->rows) +
           ',' + text::format_double(s.mean_accuracy) + ',' + text::format_double(s.mean_f1) + ',' +
           text::format_double(s.cv_percent) + ',' + join_doubles(s.accuracies) + ',' + join_doubles(s.f1s) + '\n';
  }
  return out;
}

std::vector<CaseResult> parse_results_csv(const std::string& contents) {
  std::istringstream in(contents);
  std::string line;
  std::size_t n = 0;
  if (!std::getline(in, line) || text::trim(line) != kResultsHeader) {
    throw ParseError(1, "results header must be '" + std::string(kResultsHeader) + "'");
  }
  ++n;
  std::vector<CaseResult> out;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    const auto f = text::split(line, ',');
    if (f.size() != 17) throw ParseError(n, "expected 17 fields, got " + std::to_string(f.size()));
    auto integer = [&](std::string_view s) {
      const auto v = text::parse_int(s);
      if (!v) throw ParseError(n, "bad integer '" + std::string(s) + "'");
      return *v;
    };
    CaseResult r;
    auto& c = r.sweep_case;
    try {
      c.knowledge_name = std::string(f[0]);
      c.knowledge = static_cast<int>(integer(f[1]));
      c.data_name = std::string(f[2]);
      c.data = static_cast<int>(integer(f[3]));
      c.plan_name = std::string(f[4]);
      c.selector = std::string(f[5]);
      c.cut = parse_cut(f[6]);
      c.degree = static_cast<int>(integer(f[7]));
      c.metric = parse_metric(f[8]);
      c.algorithm = ml::parse_algorithm(f[9]);
      c.seed = std::stoull(std::string(f[10]));
      r.rows = static_cast<std::size_t>(integer(f[11]));
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(n, e.what());
    }
    r.stats = ml::summarize(split_doubles(f[15], n), split_doubles(f[16], n));
    out.push_back(std::move(r));
  }
  return out;
}

std::string format_timings_csv(const std::vector<CaseResult>& results) {
  std::string out = "case,rows,wall_seconds\n";
  for (const auto* r : sorted(results)) {
    out += r->sweep_case.id() + ',' + std::to_string(r->rows) + ',' + text::format_double(r->wall_seconds) + '\n';
  }
  return out;
}

std::string format_failures_csv(const std::vector<CaseFailure>& failures) {
  std::string out = "case,error\n";
  for (const auto& f : failures) out += f.sweep_case.id() + ',' + csv_quote(f.message) + '\n';
  return out;
}

RankReport rank_and_report(const std::vector<CaseResult>& results, double threshold) {
  RankReport report;
  report.threshold = threshold;
  const auto ordered = sorted(results);

  std::set<ml::Algorithm> algorithms;
  for (const auto* r : ordered) algorithms.insert(r->sweep_case.algorithm);
  std::vector<ml::Algorithm> columns(algorithms.begin(), algorithms.end());
  for (auto a : columns) report.algorithms.emplace_back(ml::to_string(a));

  for (CutKind cut : kAllCuts) {
    CutTable table{cut, {}};
    // Row identity: everything but the algorithm, linear rows before quadratic.
    using RowKey = std::tuple<int, int, std::string, MetricKind, int, std::string>;
    std::map<RowKey, std::size_t> index;
    for (const auto* r : ordered) {
      const auto& c = r->sweep_case;
      if (c.cut != cut) continue;
      index.emplace(RowKey{-c.knowledge, -c.data, c.plan_name, c.metric, c.degree, c.selector}, 0);
    }
    std::size_t next = 0;
    for (auto& [key, i] : index) {
      i = next++;
      table.rows.emplace_back();
    }
    for (const auto* r : ordered) {
      const auto& c = r->sweep_case;
      if (c.cut != cut) continue;
      auto& row = table.rows[index.at({-c.knowledge, -c.data, c.plan_name, c.metric, c.degree, c.selector})];
      row.knowledge = c.knowledge_name;
      row.data = data_label(c);
      row.selector = c.selector;
      row.degree = c.degree;
      row.metric = c.metric;
      row.cells.resize(columns.size());
      row.top.resize(columns.size(), false);
      const auto col = static_cast<std::size_t>(std::find(columns.begin(), columns.end(), c.algorithm) -
                                                columns.begin());
      row.cells[col] = r->stats;
      row.top[col] = r->stats.mean_accuracy >= threshold;
    }
    if (!table.rows.empty()) report.tables.push_back(std::move(table));
  }

  for (const auto* r : ordered) {
    if (r->stats.mean_accuracy >= threshold) report.flagged.push_back(*r);
    const int k = r->sweep_case.knowledge;
    auto it = report.best_by_knowledge.find(k);
    if (it == report.best_by_knowledge.end()) {
      report.best_by_knowledge.emplace(k, *r);
    } else if (r->stats.mean_accuracy > it->second.stats.mean_accuracy) {
      it->second = *r;
    }
  }
  return report;
}

std::string render_table_csv(const RankReport& report, const CutTable& table) {
  std::string out = "knowledge,data,selector,signature,metric";
  for (const auto& a : report.algorithms) out += ',' + a + "_accuracy," + a + "_f1," + a + "_top";
  out += '\n';
  for (const auto& row : table.rows) {
    out += row.knowledge + ',' + row.data + ',' + row.selector + ',' + signature_name(row.degree) + ',' +
           std::string(to_string(row.metric));
    for (std::size_t i = 0; i < report.algorithms.size(); ++i) {
      if (row.cells[i]) {
        out += ',' + text::format_double(row.cells[i]->mean_accuracy) + ',' +
               text::format_double(row.cells[i]->mean_f1) + ',' + (row.top[i] ? "1" : "0");
      } else {
        out += ",,,";
      }
    }
    out += '\n';
  }
  return out;
}

std::string render_report_text(const RankReport& report, const PositionScale& knowledge_scale) {
  std::ostringstream out;
  out << "Top flag (*): mean accuracy >= " << percent(report.threshold) << "\n";
  bool interpolated = false;
  for (const auto& t : report.tables) {
    for (const auto& r : t.rows) {
      const int level = knowledge_scale.index_of(r.knowledge);
      interpolated = interpolated || (level > 0 && level < knowledge_scale.richest());
    }
  }
  if (interpolated) {
    out << "Note: intermediate knowledge levels see the outermost phases plus one inner level per step;"
           " they interpolate between the two extremes.\n";
  }

  for (const auto& table : report.tables) {
    out << "\n== " << to_string(table.cut) << " cut ==\n";
    std::string head = pad("knowledge", 11) + pad("data", 18) + pad("phase type", 24) + pad("signature", 11) +
                       pad("metric", 9);
    for (const auto& a : report.algorithms) head += pad(a + " acc.", 11) + pad("F1", 6);
    while (!head.empty() && head.back() == ' ') head.pop_back();
    out << head << "\n" << std::string(head.size(), '-') << "\n";
    for (const auto& row : table.rows) {
      std::string line = pad(row.knowledge, 11) + pad(row.data, 18) + pad(row.selector, 24) +
                         pad(signature_name(row.degree), 11) + pad(std::string(to_string(row.metric)), 9);
      for (std::size_t i = 0; i < report.algorithms.size(); ++i) {
        if (row.cells[i]) {
          line += pad(percent(row.cells[i]->mean_accuracy) + (row.top[i] ? "*" : ""), 11) +
                  pad(fixed2(row.cells[i]->mean_f1), 6);
        } else {
          line += pad("-", 11) + pad("-", 6);
        }
      }
      while (!line.empty() && line.back() == ' ') line.pop_back();
      out << line << "\n";
    }
  }

  out << "\n== top results by knowledge level ==\n";
  for (int level = knowledge_scale.richest(); level >= 0; --level) {
    std::vector<const CaseResult*> flagged;
    for (const auto& r : report.flagged) {
      if (r.sweep_case.knowledge == level) flagged.push_back(&r);
    }
    out << knowledge_scale.name_of(level) << ": " << flagged.size() << " flagged\n";
    for (const auto* r : flagged) {
      out << "  " << r->sweep_case.id() << "  " << percent(r->stats.mean_accuracy)
          << "  cv " << fixed2(r->stats.cv_percent) << "%\n";
    }
  }

  out << "\n== best per knowledge level ==\n";
  for (auto it = report.best_by_knowledge.rbegin(); it != report.best_by_knowledge.rend(); ++it) {
    const auto& r = it->second;
    out << knowledge_scale.name_of(it->first) << ": " << r.sweep_case.id() << "  "
        << percent(r.stats.mean_accuracy) << "  F1 " << fixed2(r.stats.mean_f1) << "  cv "
        << fixed2(r.stats.cv_percent) << "%\n";
  }
  return out.str();
}

CoverageGrid matrix_coverage(const std::vector<CaseResult>& results, const PositionScale& knowledge_scale,
                             const PositionScale& data_scale) {
  CoverageGrid grid{knowledge_scale, data_scale, {}};
  grid.cells.assign(static_cast<std::size_t>(data_scale.size()),
                    std::vector<CoverageCell>(static_cast<std::size_t>(knowledge_scale.size())));
  for (const auto& r : results) {
    const auto& c = r.sweep_case;
    if (c.knowledge < 0 || c.knowledge >= knowledge_scale.size() || c.data < 0 || c.data >= data_scale.size()) {
      throw Error(Errc::InvalidAxis, "case " + c.id() + " lies outside the position grid");
    }
    auto& cell = grid.cells[static_cast<std::size_t>(c.data)][static_cast<std::size_t>(c.knowledge)];
    ++cell.cases;
    if (!cell.best_accuracy || r.stats.mean_accuracy > *cell.best_accuracy) cell.best_accuracy = r.stats.mean_accuracy;
  }
  return grid;
}

std::string render_coverage_text(const CoverageGrid& grid) {
  constexpr std::size_t kWidth = 22;
  std::ostringstream out;
  std::string head = pad("data \\ knowledge", 18);
  for (const auto& k : grid.knowledge_scale.levels) head += pad(k, kWidth);
  while (!head.empty() && head.back() == ' ') head.pop_back();
  out << head << "\n";
  for (int d = 0; d < grid.data_scale.size(); ++d) {
    std::string line = pad(grid.data_scale.name_of(d), 18);
    for (const auto& cell : grid.cells[static_cast<std::size_t>(d)]) {
      line += pad(cell.cases == 0 ? "uncovered"
                                  : std::to_string(cell.cases) + " cases, best " + percent(*cell.best_accuracy),
                  kWidth);
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out << line << "\n";
  }
  return out.str();
}

std::string render_coverage_csv(const CoverageGrid& grid) {
  std::string out = "data,knowledge,cases,best_accuracy\n";
  for (int d = 0; d < grid.data_scale.size(); ++d) {
    for (int k = 0; k < grid.knowledge_scale.size(); ++k) {
      const auto& cell = grid.at({{k}, {d}});
      out += grid.data_scale.name_of(d) + ',' + grid.knowledge_scale.name_of(k) + ',' + std::to_string(cell.cases) +
             ',' + (cell.best_accuracy ? text::format_double(*cell.best_accuracy) : "") + '\n';
    }
  }
  return out;
}

void write_reports(const std::vector<CaseResult>& results, double threshold, const PositionScale& knowledge_scale,
                   const PositionScale& data_scale, const std::filesystem::path& out_dir) {
  const auto report = rank_and_report(results, threshold);
  for (const auto& table : report.tables) {
    text::write_file(out_dir / ("report_" + std::string(to_string(table.cut)) + ".csv"),
                     render_table_csv(report, table));
  }
  text::write_file(out_dir / "report.txt", render_report_text(report, knowledge_scale));
  const auto grid = matrix_coverage(results, knowledge_scale, data_scale);
  text::write_file(out_dir / "coverage.txt", render_coverage_text(grid));
  text::write_file(out_dir / "coverage.csv", render_coverage_csv(grid));
}

}  // namespace infopos::sweep

#include "infopos/sweep.hpp"

#include <chrono>
#include <cmath>
#include <mutex>
#include <set>
#include <tuple>

#include "infopos/error.hpp"
#include "infopos/rng.hpp"
#include "infopos/text.hpp"
#include "json_io.hpp"
#include "parallel.hpp"

namespace infopos::sweep {

using nlohmann::json;

namespace {

template <class T>
void require_axis(const std::vector<T>& axis, const char* name) {
  if (axis.empty()) throw Error(Errc::InvalidAxis, std::string("sweep axis '") + name + "' is empty");
}

void require_plain_name(const std::string& name, const char* what) {
  if (name.empty() || name.find_first_of(",\"\n\r") != std::string::npos) {
    throw Error(Errc::InvalidArgument, std::string(what) + " '" + name + "' must be non-empty without commas or quotes");
  }
}

std::string raw_message(const Error& e) {
  std::string msg = e.what();
  const std::string prefix = std::string(to_string(e.code())) + ": ";
  if (msg.rfind(prefix, 0) == 0) msg.erase(0, prefix.size());
  return msg;
}

PositionScale scale_from_json(const json& j, const char* key) {
  PositionScale scale;
  if (j.contains(key)) scale.levels = j.at(key).get<std::vector<std::string>>();
  if (scale.levels.empty()) throw Error(Errc::InvalidAxis, std::string(key) + " must name at least one level");
  std::set<std::string> seen(scale.levels.begin(), scale.levels.end());
  if (seen.size() != scale.levels.size()) throw Error(Errc::InvalidAxis, std::string(key) + " repeats a level");
  return scale;
}

int data_level_of(const DegradationPlan& plan, const PositionScale& scale) {
  return plan.position.empty() ? scale.richest() : scale.index_of(plan.position);
}

// Everything that shapes a case's feature dataset; cases sharing it differ
// only in knowledge level or algorithm.
using DatasetKey = std::tuple<std::size_t, std::string, CutKind, int, MetricKind>;

DatasetKey dataset_key(const SweepCase& c) { return {c.plan_index, c.selector, c.cut, c.degree, c.metric}; }

std::vector<const ScenarioRun*> labelled_runs(const SweepConfig& config, const Corpus& corpus) {
  std::vector<const ScenarioRun*> runs;
  for (const auto& run : corpus.runs) {
    const auto& names = config.labels.names;
    if (std::find(names.begin(), names.end(), run.meta.label) != names.end()) runs.push_back(&run);
  }
  return runs;
}

const MetricTrace& trace_of(const ScenarioRun& run, MetricKind metric) {
  const MetricTrace* t = run.trace(metric);
  if (t == nullptr) {
    throw Error(Errc::MissingFile,
                "scenario '" + run.meta.scenario_id + "' has no " + std::string(to_string(metric)) + " trace");
  }
  return *t;
}

ml::FoldStats evaluate_case(const SweepCase& c, const SweepConfig& config, const Dataset& dataset, int workers) {
  const auto data = ml::from_dataset(dataset, config.labels.names);
  const auto folds = config.cv_mode == CvMode::Stratified
                         ? ml::stratified_kfold(data.y, config.folds, c.seed)
                         : ml::grouped_kfold(data.y, data.groups, config.folds, c.seed);
  ml::MlConfig mc = config.ml;
  mc.workers = workers;
  const auto model_seed = derive_seed(c.seed, {hash_string(to_string(c.algorithm))});
  auto stats = ml::evaluate(ml::make_factory(c.algorithm, mc), data, folds, model_seed);
  if (!std::isfinite(stats.mean_accuracy) || !std::isfinite(stats.mean_f1) || !std::isfinite(stats.cv_percent)) {
    throw Error(Errc::DomainError, "non-finite fold statistics");
  }
  return stats;
}

std::string result_line(const CaseResult& r) {
  return "event=case_done case=" + r.sweep_case.id() + " rows=" + std::to_string(r.rows) +
         " accuracy=" + text::format_double(r.stats.mean_accuracy) +
         " f1=" + text::format_double(r.stats.mean_f1);
}

SweepOutcome run_sweep_impl(const SweepConfig& config, const Corpus& corpus, const ProgressLog& log,
                            bool parallel) {
  const PhaseDepths depths = config.phases.empty() ? corpus_phase_depths(corpus) : config.phases;
  const auto cases = enumerate_cases(config, depths);
  const auto passports = build_passport_store(config, corpus, cases, depths);

  std::map<DatasetKey, std::size_t> key_index;
  std::vector<const SweepCase*> key_owner;
  for (const auto& c : cases) {
    if (key_index.emplace(dataset_key(c), key_owner.size()).second) key_owner.push_back(&c);
  }

  std::mutex log_mutex;
  auto emit = [&](const std::string& line) {
    if (!log) return;
    std::lock_guard lock(log_mutex);
    log(line);
  };
  emit("event=sweep_start cases=" + std::to_string(cases.size()) + " datasets=" + std::to_string(key_owner.size()) +
       " passports=" + std::to_string(passports.size()));

  auto for_each = [&](std::size_t n, auto&& body) {
    if (parallel) {
      detail::parallel_for(n, config.workers, body);
    } else {
      for (std::size_t i = 0; i < n; ++i) body(i);
    }
  };

  std::vector<std::optional<Dataset>> datasets(key_owner.size());
  std::vector<std::string> dataset_errors(key_owner.size());
  for_each(key_owner.size(), [&](std::size_t i) {
    try {
      datasets[i] = build_case_dataset(*key_owner[i], config, corpus, passports, depths);
    } catch (const Error& e) {
      dataset_errors[i] = std::string(to_string(e.code())) + ": " + raw_message(e);
    }
  });

  std::vector<std::optional<CaseResult>> results(cases.size());
  std::vector<std::string> errors(cases.size());
  for_each(cases.size(), [&](std::size_t i) {
    const auto& c = cases[i];
    const std::size_t k = key_index.at(dataset_key(c));
    if (!datasets[k]) {
      errors[i] = c.id() + ": " + dataset_errors[k];
    } else {
      try {
        const auto start = std::chrono::steady_clock::now();
        CaseResult r{c, evaluate_case(c, config, *datasets[k], 1), datasets[k]->rows.size(), 0.0};
        r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        emit(result_line(r));
        results[i] = std::move(r);
      } catch (const Error& e) {
        errors[i] = c.id() + ": " + std::string(to_string(e.code())) + ": " + raw_message(e);
      }
    }
    if (!errors[i].empty()) emit("event=case_failed case=" + c.id() + " error=\"" + errors[i] + "\"");
  });

  SweepOutcome out;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    if (results[i]) {
      out.results.push_back(std::move(*results[i]));
    } else {
      out.failures.push_back({cases[i], errors[i]});
    }
  }
  emit("event=sweep_done completed=" + std::to_string(out.results.size()) +
       " failed=" + std::to_string(out.failures.size()));
  return out;
}

}  // namespace

SweepConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir) {
  SweepConfig config;
  try {
    const json j = json::parse(json_text);
    if (j.contains("corpus")) {
      const auto& c = j.at("corpus");
      if (c.contains("catalog")) {
        std::filesystem::path p = c.at("catalog").get<std::string>();
        config.catalog = p.is_relative() ? base_dir / p : p;
      } else if (c.contains("synth")) {
        const auto& s = c.at("synth");
        config.synth = s.is_string() && s.get<std::string>() == "demo" ? demo_corpus_spec()
                                                                        : detail::corpus_spec_from_json(s);
      } else {
        throw Error(Errc::InvalidArgument, "corpus needs 'catalog' or 'synth'");
      }
    } else {
      config.synth = demo_corpus_spec();
    }
    if (j.contains("labels")) config.labels.names = j.at("labels").get<std::vector<std::string>>();
    config.labels.validate();
    for (const auto& l : config.labels.names) require_plain_name(l, "label");

    config.knowledge_scale = scale_from_json(j, "knowledge_levels");
    config.data_scale = scale_from_json(j, "data_levels");
    config.knowledge = j.contains("knowledge") ? j.at("knowledge").get<std::vector<std::string>>()
                                               : std::vector<std::string>{config.knowledge_scale.levels.back()};
    config.selectors = j.value("selectors", std::vector<std::string>{});
    if (j.contains("cuts")) {
      config.cuts.clear();
      for (const auto& c : j.at("cuts")) config.cuts.push_back(parse_cut(c.get<std::string>()));
    }
    config.degrees = j.value("degrees", config.degrees);
    if (j.contains("metrics")) {
      config.metrics.clear();
      for (const auto& m : j.at("metrics")) config.metrics.push_back(parse_metric(m.get<std::string>()));
    }
    if (j.contains("algorithms")) {
      config.algorithms.clear();
      for (const auto& a : j.at("algorithms")) config.algorithms.push_back(ml::parse_algorithm(a.get<std::string>()));
    }
    if (j.contains("data_positions")) {
      for (const auto& p : j.at("data_positions")) config.data_positions.push_back(detail::plan_from_json(p));
    } else {
      config.data_positions.push_back(DegradationPlan{});
    }
    std::set<std::string> plan_names;
    for (const auto& p : config.data_positions) {
      require_plain_name(p.name, "degradation plan name");
      if (!plan_names.insert(p.name).second) {
        throw Error(Errc::InvalidAxis, "degradation plan name '" + p.name + "' repeats");
      }
      data_level_of(p, config.data_scale);
    }
    if (j.contains("ml")) {
      const auto& m = j.at("ml");
      auto& ml = config.ml;
      if (m.contains("tree")) ml.tree = detail::tree_params_from_json(m.at("tree"), ml.tree);
      if (m.contains("forest_tree")) ml.forest_tree = detail::tree_params_from_json(m.at("forest_tree"), ml.forest_tree);
      if (m.contains("forest")) ml.forest = detail::ensemble_params_from_json(m.at("forest"), ml.forest);
      if (m.contains("boost_tree")) ml.boost_tree = detail::tree_params_from_json(m.at("boost_tree"), ml.boost_tree);
      if (m.contains("boost")) ml.boost = detail::ensemble_params_from_json(m.at("boost"), ml.boost);
    }
    config.folds = j.value("folds", config.folds);
    const auto cv = j.value("cv_mode", std::string("stratified"));
    if (cv == "stratified") {
      config.cv_mode = CvMode::Stratified;
    } else if (cv == "grouped") {
      config.cv_mode = CvMode::Grouped;
    } else {
      throw Error(Errc::InvalidArgument, "cv_mode must be 'stratified' or 'grouped'");
    }
    config.threshold = j.value("threshold", config.threshold);
    config.seed = j.value("seed", config.seed);
    config.workers = j.value("workers", config.workers);
    if (j.contains("phases")) config.phases = j.at("phases").get<std::map<std::string, int>>();
  } catch (const json::exception& e) {
    throw ParseError(0, std::string("sweep config: ") + e.what());
  }
  if (config.folds < 2) throw Error(Errc::InvalidArgument, "folds must be >= 2");
  if (!(config.threshold > 0.0 && config.threshold <= 1.0)) {
    throw Error(Errc::InvalidArgument, "threshold must lie in (0,1]");
  }
  for (int d : config.degrees) {
    if (d != 1 && d != 2) throw Error(Errc::InvalidAxis, "degree must be 1 or 2");
  }
  return config;
}

SweepConfig read_config(const std::filesystem::path& path) {
  return parse_config(text::read_file(path), path.parent_path());
}

std::string config_to_json(const SweepConfig& config) {
  json j;
  if (!config.catalog.empty()) {
    j["corpus"] = {{"catalog", config.catalog.string()}};
  } else if (config.synth) {
    j["corpus"] = {{"synth", detail::corpus_spec_to_json(*config.synth)}};
  }
  j["labels"] = config.labels.names;
  j["knowledge_levels"] = config.knowledge_scale.levels;
  j["data_levels"] = config.data_scale.levels;
  j["knowledge"] = config.knowledge;
  j["selectors"] = config.selectors;
  j["cuts"] = json::array();
  for (auto c : config.cuts) j["cuts"].push_back(to_string(c));
  j["degrees"] = config.degrees;
  j["metrics"] = json::array();
  for (auto m : config.metrics) j["metrics"].push_back(to_string(m));
  j["algorithms"] = json::array();
  for (auto a : config.algorithms) j["algorithms"].push_back(ml::to_string(a));
  j["data_positions"] = json::array();
  for (const auto& p : config.data_positions) j["data_positions"].push_back(detail::plan_to_json(p));
  j["ml"] = {{"tree", detail::tree_params_to_json(config.ml.tree)},
             {"forest_tree", detail::tree_params_to_json(config.ml.forest_tree)},
             {"forest", detail::ensemble_params_to_json(config.ml.forest)},
             {"boost_tree", detail::tree_params_to_json(config.ml.boost_tree)},
             {"boost", detail::ensemble_params_to_json(config.ml.boost)}};
  j["folds"] = config.folds;
  j["cv_mode"] = config.cv_mode == CvMode::Stratified ? "stratified" : "grouped";
  j["threshold"] = config.threshold;
  j["seed"] = config.seed;
  j["workers"] = config.workers;
  if (!config.phases.empty()) j["phases"] = config.phases;
  return j.dump(2) + "\n";
}

Corpus load_sweep_corpus(const SweepConfig& config) {
  if (!config.catalog.empty()) return load_corpus(config.catalog);
  if (config.synth) return to_corpus(synth_corpus(*config.synth));
  throw Error(Errc::InvalidArgument, "sweep config names no corpus");
}

PhaseDepths corpus_phase_depths(const Corpus& corpus) {
  PhaseDepths all;
  for (const auto& run : corpus.runs) {
    for (const auto& [type, depth] : phase_depths(run.intervals)) {
      auto [it, inserted] = all.emplace(type, depth);
      if (!inserted && it->second != depth) {
        throw Error(Errc::NestingViolation, "phase type '" + type + "' sits at depth " + std::to_string(depth) +
                                                " in scenario '" + run.meta.scenario_id + "' and " +
                                                std::to_string(it->second) + " elsewhere");
      }
    }
  }
  return all;
}

std::string SweepCase::id() const {
  return knowledge_name + "/" + data_name + ":" + plan_name + "/" + selector + "/" + std::string(to_string(cut)) +
         "/deg" + std::to_string(degree) + "/" + std::string(to_string(metric)) + "/" +
         std::string(ml::to_string(algorithm));
}

std::vector<SweepCase> enumerate_cases(const SweepConfig& config, const PhaseDepths& depths) {
  require_axis(config.knowledge, "knowledge");
  require_axis(config.selectors, "selectors");
  require_axis(config.cuts, "cuts");
  require_axis(config.degrees, "degrees");
  require_axis(config.metrics, "metrics");
  require_axis(config.algorithms, "algorithms");
  require_axis(config.data_positions, "data_positions");

  std::vector<PhaseSelector> selectors;
  for (const auto& s : config.selectors) selectors.push_back(parse_selector(s));

  std::vector<SweepCase> cases;
  for (std::size_t p = 0; p < config.data_positions.size(); ++p) {
    const auto& plan = config.data_positions[p];
    const int data = data_level_of(plan, config.data_scale);
    for (const auto& kname : config.knowledge) {
      const int knowledge = config.knowledge_scale.index_of(kname);
      for (const auto& sel : selectors) {
        if (!selector_permitted(sel, {knowledge}, config.knowledge_scale, depths)) continue;
        for (auto cut : config.cuts) {
          for (int degree : config.degrees) {
            for (auto metric : config.metrics) {
              const auto seed = derive_seed(config.seed, {hash_string(plan.name), hash_string(sel.name),
                                                          static_cast<std::uint64_t>(cut),
                                                          static_cast<std::uint64_t>(degree),
                                                          static_cast<std::uint64_t>(metric)});
              for (auto algorithm : config.algorithms) {
                SweepCase c;
                c.knowledge = knowledge;
                c.knowledge_name = config.knowledge_scale.name_of(knowledge);
                c.data = data;
                c.data_name = config.data_scale.name_of(data);
                c.plan_index = p;
                c.plan_name = plan.name;
                c.selector = sel.name;
                c.cut = cut;
                c.degree = degree;
                c.metric = metric;
                c.algorithm = algorithm;
                c.seed = seed;
                cases.push_back(std::move(c));
              }
            }
          }
        }
      }
    }
  }
  return cases;
}

PassportStore build_passport_store(const SweepConfig& config, const Corpus& corpus,
                                   const std::vector<SweepCase>& cases, const PhaseDepths& depths) {
  std::set<PassportKey> needed;
  for (const auto& c : cases) {
    for (const auto& phase : resolve_selector(parse_selector(c.selector), depths)) {
      needed.insert({phase, c.metric, c.cut, c.degree});
    }
  }
  std::vector<const ScenarioRun*> normal;
  for (const auto* run : labelled_runs(config, corpus)) {
    if (run->meta.label == kNormalLabel) normal.push_back(run);
  }

  // Keys share their Full segments per (phase, metric); a key that cannot be
  // built is left out so only the cases that need it fail.
  PassportStore store;
  std::map<std::pair<std::string, MetricKind>, std::optional<std::vector<Segment>>> full;
  for (const auto& key : needed) {
    auto& segs = full[{key.phase_type, key.metric}];
    try {
      if (!segs) {
        std::vector<Segment> all;
        for (const auto* run : normal) {
          auto s = informed_cut(trace_of(*run, key.metric), run->intervals, key.phase_type);
          all.insert(all.end(), std::make_move_iterator(s.begin()), std::make_move_iterator(s.end()));
        }
        segs = std::move(all);
      }
      std::vector<Segment> cut;
      cut.reserve(segs->size());
      for (const auto& s : *segs) cut.push_back(uninformed_cut(s, key.cut));
      store.add(build_mean_passport(cut, key.degree));
    } catch (const Error&) {
      if (!segs) segs = std::vector<Segment>{};
    }
  }
  return store;
}

Dataset build_case_dataset(const SweepCase& c, const SweepConfig& config, const Corpus& corpus,
                           const PassportStore& passports, const PhaseDepths& depths) {
  DegradationPlan plan = config.data_positions.at(c.plan_index);
  plan.seed = derive_seed(config.seed, {plan.seed});
  const auto phases = resolve_selector(parse_selector(c.selector), depths);

  std::vector<FeatureRow> rows;
  for (const auto* run : labelled_runs(config, corpus)) {
    const auto& trace = trace_of(*run, c.metric);
    for (const auto& phase : phases) {
      const auto& passport = passports.at({phase, c.metric, c.cut, c.degree});
      const auto segments = informed_cut(trace, run->intervals, phase);
      for (std::size_t i = 0; i < segments.size(); ++i) {
        const Segment degraded = degrade::apply_plan(segments[i], plan, i);
        const Segment seg = uninformed_cut(degraded, c.cut);
        rows.push_back(extract_row(seg, fit_signature(seg, c.degree), passport));
      }
    }
  }
  return assemble_dataset(std::move(rows));
}

CaseResult run_case(const SweepCase& c, const SweepConfig& config, const Corpus& corpus,
                    const PassportStore& passports, const PhaseDepths& depths) {
  try {
    const auto start = std::chrono::steady_clock::now();
    const Dataset dataset = build_case_dataset(c, config, corpus, passports, depths);
    CaseResult r{c, evaluate_case(c, config, dataset, config.ml.workers), dataset.rows.size(), 0.0};
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
  } catch (const Error& e) {
    throw Error(e.code(), c.id() + ": " + raw_message(e));
  }
}

SweepOutcome run_sweep(const SweepConfig& config, const Corpus& corpus, const ProgressLog& log) {
  return run_sweep_impl(config, corpus, log, true);
}

SweepOutcome run_sweep_serial(const SweepConfig& config, const Corpus& corpus, const ProgressLog& log) {
  return run_sweep_impl(config, corpus, log, false);
}

}  // namespace infopos::sweep

#include "infopos/cli.hpp"

#include <CLI11.hpp>
#include <cstdlib>
#include <optional>
#include <set>

#include "infopos/error.hpp"
#include "infopos/features.hpp"
#include "infopos/ingest.hpp"
#include "infopos/ml.hpp"
#include "infopos/passport.hpp"
#include "infopos/segmentation.hpp"
#include "infopos/sweep.hpp"
#include "infopos/synth.hpp"
#include "infopos/text.hpp"

namespace infopos::cli {

namespace {

namespace fs = std::filesystem;

struct Flags {
  std::string config;
  std::string out;
  std::string catalog;
  std::string trace;
  std::string events;
  std::string spec = "demo";
  std::string plan;
  std::string passports;
  std::string dataset;
  std::string model;
  std::string results;
  std::string knowledge;
  std::string metric = "current";
  std::string cut = "full";
  std::string phase;
  std::string algorithm = "DT";
  std::uint64_t seed = 0;
  int workers = 0;
  int degree = 1;
  double threshold = 0.99;

  const CLI::App* command = nullptr;  // the parsed subcommand
};

bool given(const Flags& f, const char* name) {
  const CLI::Option* opt = f.command == nullptr ? nullptr : f.command->get_option_no_throw(name);
  return opt != nullptr && opt->count() > 0;
}

// Worker count: --workers, else INFOPOS_WORKERS, else the OpenMP default.
int worker_count(const Flags& f) {
  if (given(f, "--workers")) return f.workers;
  if (const char* env = std::getenv("INFOPOS_WORKERS")) {
    if (const auto v = text::parse_int(env); v && *v >= 0) return static_cast<int>(*v);
  }
  return 0;
}

std::string quoted(std::string s) {
  for (auto& c : s) {
    if (c == '"' || c == '\n') c = '\'';
  }
  return "\"" + s + "\"";
}

std::string raw_message(const Error& e) {
  std::string msg = e.what();
  const std::string prefix = std::string(to_string(e.code())) + ": ";
  if (msg.rfind(prefix, 0) == 0) msg.erase(0, prefix.size());
  return msg;
}

sweep::SweepConfig base_config(const Flags& f) {
  sweep::SweepConfig config = f.config.empty() ? sweep::SweepConfig{} : sweep::read_config(f.config);
  if (!f.catalog.empty()) {
    config.catalog = f.catalog;
    config.synth.reset();
  }
  if (config.data_positions.empty()) config.data_positions.push_back(DegradationPlan{});
  return config;
}

ml::MlConfig ml_config(const Flags& f) {
  ml::MlConfig ml = f.config.empty() ? ml::MlConfig{} : sweep::read_config(f.config).ml;
  ml.workers = worker_count(f);
  return ml;
}

Corpus corpus_of(const sweep::SweepConfig& config) {
  if (config.catalog.empty() && !config.synth) throw Error(Errc::InvalidArgument, "no corpus: pass --catalog");
  return sweep::load_sweep_corpus(config);
}

void write_segments_csv(const std::vector<Segment>& segments, const fs::path& path) {
  std::string out = "scenario_id,phase_type,instance_id,cut,label,t_start,t_end,t,value\n";
  for (const auto& s : segments) {
    const std::string prefix = s.scenario_id + ',' + s.phase_type + ',' + std::to_string(s.instance_id) + ',' +
                               std::string(to_string(s.cut)) + ',' + s.label + ',' + text::format_double(s.t_start) +
                               ',' + text::format_double(s.t_end) + ',';
    for (const auto& p : s.samples) out += prefix + text::format_double(p.t) + ',' + text::format_double(p.value) + '\n';
  }
  text::write_file(path, out);
}

int cmd_validate(const Flags& f, std::ostream& out) {
  if (f.catalog.empty() && f.trace.empty() && f.events.empty()) {
    throw CLI::ValidationError("validate", "pass --catalog, --trace or --events");
  }
  int bad = 0;
  if (!f.catalog.empty()) {
    for (const auto& meta : load_catalog(f.catalog)) {
      try {
        const auto run = load_scenario(meta);
        std::size_t samples = 0;
        for (const auto& t : run.traces) samples += t.samples.size();
        out << "event=scenario_ok scenario=" << meta.scenario_id << " label=" << meta.label
            << " traces=" << run.traces.size() << " samples=" << samples << " intervals=" << run.intervals.size()
            << "\n";
      } catch (const Error& e) {
        ++bad;
        out << "event=scenario_invalid scenario=" << meta.scenario_id << " code=" << to_string(e.code())
            << " message=" << quoted(raw_message(e)) << "\n";
      }
    }
  }
  if (!f.trace.empty()) {
    try {
      const auto t = read_trace_csv(f.trace, parse_metric(f.metric));
      out << "event=trace_ok file=" << f.trace << " samples=" << t.samples.size() << "\n";
    } catch (const Error& e) {
      ++bad;
      out << "event=trace_invalid file=" << f.trace << " code=" << to_string(e.code())
          << " message=" << quoted(raw_message(e)) << "\n";
    }
  }
  if (!f.events.empty()) {
    try {
      const auto intervals = pair_phase_events(read_phase_events_csv(f.events));
      out << "event=events_ok file=" << f.events << " intervals=" << intervals.size()
          << " phase_types=" << phase_depths(intervals).size() << "\n";
    } catch (const Error& e) {
      ++bad;
      out << "event=events_invalid file=" << f.events << " code=" << to_string(e.code())
          << " message=" << quoted(raw_message(e)) << "\n";
    }
  }
  out << "event=validate_done invalid=" << bad << "\n";
  return bad == 0 ? kExitOk : kExitFailure;
}

int cmd_synth(const Flags& f, std::ostream& out) {
  CorpusSpec spec = f.spec == "demo" ? demo_corpus_spec() : parse_corpus_spec(text::read_file(f.spec));
  if (given(f, "--seed")) spec.seed = f.seed;
  const auto scenarios = synth_corpus(spec);
  write_corpus(scenarios, f.out);
  text::write_file(fs::path(f.out) / "spec.json", corpus_spec_to_json(spec));
  out << "event=synth_done scenarios=" << scenarios.size() << " seed=" << spec.seed << " out=" << f.out << "\n";
  return kExitOk;
}

int cmd_segment(const Flags& f, std::ostream& out) {
  const auto config = base_config(f);
  const auto corpus = corpus_of(config);
  const auto depths = config.phases.empty() ? sweep::corpus_phase_depths(corpus) : config.phases;
  const auto selector = parse_selector(f.phase);
  const int knowledge = f.knowledge.empty() ? config.knowledge_scale.richest()
                                            : config.knowledge_scale.index_of(f.knowledge);
  if (!selector_permitted(selector, {knowledge}, config.knowledge_scale, depths)) {
    throw Error(Errc::InvalidArgument, "selector '" + selector.name + "' is not visible at knowledge level " +
                                           config.knowledge_scale.name_of(knowledge));
  }
  const auto metric = parse_metric(f.metric);
  const auto cut = parse_cut(f.cut);
  std::vector<Segment> segments;
  for (const auto& run : corpus.runs) {
    const MetricTrace* trace = run.trace(metric);
    if (trace == nullptr) throw Error(Errc::MissingFile, run.meta.scenario_id + " has no " + f.metric + " trace");
    for (const auto& phase : resolve_selector(selector, depths)) {
      for (const auto& s : informed_cut(*trace, run.intervals, phase)) segments.push_back(uninformed_cut(s, cut));
    }
  }
  write_segments_csv(segments, fs::path(f.out) / "segments.csv");
  out << "event=segment_done selector=" << quoted(selector.name) << " cut=" << f.cut
      << " segments=" << segments.size() << "\n";
  return kExitOk;
}

int cmd_passport(const Flags& f, std::ostream& out) {
  const auto config = base_config(f);
  const auto corpus = corpus_of(config);
  const auto depths = config.phases.empty() ? sweep::corpus_phase_depths(corpus) : config.phases;
  std::vector<std::string> phases;
  if (given(f, "--phase")) {
    phases = resolve_selector(parse_selector(f.phase), depths);
  } else {
    for (const auto& [type, depth] : depths) phases.push_back(type);
  }
  std::vector<CutKind> cuts(std::begin(kAllCuts), std::end(kAllCuts));
  if (given(f, "--cut")) cuts = {parse_cut(f.cut)};
  std::vector<int> degrees{1, 2};
  if (given(f, "--degree")) degrees = {f.degree};

  std::vector<sweep::SweepCase> cases;
  for (const auto& phase : phases) {
    for (auto cut : cuts) {
      for (int degree : degrees) {
        sweep::SweepCase c;
        c.selector = phase;
        c.cut = cut;
        c.degree = degree;
        c.metric = parse_metric(f.metric);
        cases.push_back(c);
      }
    }
  }
  const auto store = sweep::build_passport_store(config, corpus, cases, depths);
  store.write(fs::path(f.out) / "passports.csv");
  out << "event=passport_done passports=" << store.size() << " requested=" << cases.size() << "\n";
  return store.size() == cases.size() ? kExitOk : kExitFailure;
}

int cmd_dataset(const Flags& f, std::ostream& out) {
  auto config = base_config(f);
  if (!f.plan.empty()) config.data_positions = {degrade::parse_plan(text::read_file(f.plan))};
  if (given(f, "--seed")) config.seed = f.seed;
  const auto corpus = corpus_of(config);
  const auto depths = config.phases.empty() ? sweep::corpus_phase_depths(corpus) : config.phases;

  sweep::SweepCase c;
  c.selector = parse_selector(f.phase).name;
  c.cut = parse_cut(f.cut);
  c.degree = f.degree;
  c.metric = parse_metric(f.metric);
  c.plan_index = 0;
  const auto passports = f.passports.empty() ? sweep::build_passport_store(config, corpus, {c}, depths)
                                             : PassportStore::read(f.passports);
  const auto dataset = sweep::build_case_dataset(c, config, corpus, passports, depths);
  write_dataset(dataset, fs::path(f.out) / "dataset.csv");
  out << "event=dataset_done rows=" << dataset.rows.size();
  for (const auto& [label, n] : dataset.class_counts) out << " " << label << "=" << n;
  out << "\n";
  return kExitOk;
}

int cmd_degrade(const Flags& f, std::ostream& out) {
  auto plan = degrade::parse_plan(text::read_file(f.plan));
  if (given(f, "--seed")) plan.seed = f.seed;
  const auto trace = read_trace_csv(f.trace, parse_metric(f.metric), fs::path(f.trace).stem().string());
  Segment seg;
  seg.scenario_id = trace.scenario_id;
  seg.metric = trace.metric;
  seg.phase_type = "trace";
  seg.samples = trace.samples;
  seg.t_start = trace.samples.front().t;
  seg.t_end = trace.samples.back().t;
  const auto degraded = degrade::apply_plan(seg, plan, 0);
  std::vector<Sample> samples = degraded.samples;
  for (auto& s : samples) s.t += trace.time_origin;
  write_trace_csv(samples, fs::path(f.out) / "degraded.csv");
  out << "event=degrade_done plan=" << plan.name << " samples_in=" << seg.samples.size()
      << " samples_out=" << samples.size() << "\n";
  return kExitOk;
}

ml::TrainingSet training_set(const Flags& f) {
  const auto labels = f.config.empty() ? LabelSet{}.names : sweep::read_config(f.config).labels.names;
  return ml::from_dataset(read_dataset(f.dataset), labels);
}

int cmd_train(const Flags& f, std::ostream& out) {
  const auto data = training_set(f);
  const auto algorithm = ml::parse_algorithm(f.algorithm);
  const auto model = ml::make_factory(algorithm, ml_config(f))(data, f.seed);
  ml::write_model(model, fs::path(f.out) / "model.json");
  const auto m = ml::score_predictions(data.y, ml::predict_indices(model, data.x),
                                       static_cast<int>(data.classes.size()));
  out << "event=train_done algorithm=" << ml::to_string(algorithm) << " rows=" << data.size()
      << " trees=" << model.trees.size() << " train_accuracy=" << text::format_double(m.accuracy) << "\n";
  return kExitOk;
}

int cmd_eval(const Flags& f, std::ostream& out) {
  if (!f.model.empty()) {
    const auto model = ml::read_model(f.model);
    const auto dataset = read_dataset(f.dataset);
    ml::TrainingSet data = ml::from_dataset(dataset);
    std::vector<int> truth;
    for (const auto& row : dataset.rows) {
      const auto it = std::find(model.classes.begin(), model.classes.end(), row.label);
      if (it == model.classes.end()) throw Error(Errc::SchemaMismatch, "label '" + row.label + "' unknown to model");
      truth.push_back(static_cast<int>(it - model.classes.begin()));
    }
    const auto m = ml::score_predictions(truth, ml::predict_indices(model, data.x),
                                         static_cast<int>(model.classes.size()));
    out << "event=eval_done mode=holdout rows=" << truth.size() << " accuracy=" << text::format_double(m.accuracy)
        << " macro_f1=" << text::format_double(m.macro_f1) << "\n";
    return kExitOk;
  }
  const auto data = training_set(f);
  const int folds = f.config.empty() ? 3 : sweep::read_config(f.config).folds;
  const auto algorithm = ml::parse_algorithm(f.algorithm);
  const auto stats = ml::evaluate(ml::make_factory(algorithm, ml_config(f)), data, folds, f.seed);
  for (std::size_t i = 0; i < stats.accuracies.size(); ++i) {
    out << "event=fold fold=" << i << " accuracy=" << text::format_double(stats.accuracies[i])
        << " macro_f1=" << text::format_double(stats.f1s[i]) << "\n";
  }
  out << "event=eval_done mode=cv algorithm=" << ml::to_string(algorithm) << " folds=" << folds
      << " mean_accuracy=" << text::format_double(stats.mean_accuracy)
      << " mean_f1=" << text::format_double(stats.mean_f1)
      << " cv_percent=" << text::format_double(stats.cv_percent) << "\n";
  return kExitOk;
}

int cmd_sweep(const Flags& f, std::ostream& out) {
  auto config = sweep::read_config(f.config);
  if (given(f, "--seed")) config.seed = f.seed;
  if (given(f, "--threshold")) config.threshold = f.threshold;
  if (given(f, "--workers") || std::getenv("INFOPOS_WORKERS") != nullptr) config.workers = worker_count(f);
  const fs::path dir = f.out;
  const auto corpus = sweep::load_sweep_corpus(config);
  const auto outcome = sweep::run_sweep(config, corpus, [&](const std::string& line) { out << line << "\n"; });

  text::write_file(dir / "config.json", sweep::config_to_json(config));
  text::write_file(dir / "results.csv", sweep::format_results_csv(outcome.results));
  text::write_file(dir / "timings.csv", sweep::format_timings_csv(outcome.results));
  text::write_file(dir / "failures.csv", sweep::format_failures_csv(outcome.failures));
  sweep::write_reports(outcome.results, config.threshold, config.knowledge_scale, config.data_scale, dir);
  out << "event=sweep_written out=" << f.out << " results=" << outcome.results.size()
      << " failures=" << outcome.failures.size() << "\n";
  return outcome.failures.empty() ? kExitOk : kExitFailure;
}

int cmd_report(const Flags& f, std::ostream& out) {
  sweep::SweepConfig config;
  if (!f.config.empty()) config = sweep::read_config(f.config);
  const double threshold = given(f, "--threshold") ? f.threshold : config.threshold;
  const auto results = sweep::parse_results_csv(text::read_file(f.results));
  sweep::write_reports(results, threshold, config.knowledge_scale, config.data_scale, f.out);
  out << "event=report_done results=" << results.size() << " out=" << f.out << "\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Phase segmentation, regression passports, feature datasets and tree classifiers for metric traces",
               "infopos"};
  app.require_subcommand(1);
  Flags f;

  const auto metric_check = CLI::IsMember({"current", "power", "energy", "voltage"}, CLI::ignore_case);
  const auto cut_check = CLI::IsMember({"full", "ini", "mid", "end"}, CLI::ignore_case);
  const auto algorithm_check = CLI::IsMember({"BDT", "DT", "ET", "RF"}, CLI::ignore_case);

  auto add_seed = [&](CLI::App* cmd) { cmd->add_option("--seed", f.seed, "Random seed"); };
  auto add_workers = [&](CLI::App* cmd) {
    cmd->add_option("--workers", f.workers, "Worker threads (default $INFOPOS_WORKERS)")->check(CLI::NonNegativeNumber);
  };
  auto add_out = [&](CLI::App* cmd) { cmd->add_option("--out", f.out, "Output directory")->required(); };
  auto add_metric = [&](CLI::App* cmd) {
    cmd->add_option("--metric", f.metric, "Metric kind")->check(metric_check)->capture_default_str();
  };
  auto add_cut = [&](CLI::App* cmd) {
    cmd->add_option("--cut", f.cut, "Data cut: full, ini, mid or end")->check(cut_check);
  };
  auto add_degree = [&](CLI::App* cmd) {
    cmd->add_option("--degree", f.degree, "Signature degree (1 or 2)")->check(CLI::Range(1, 2));
  };
  auto add_corpus = [&](CLI::App* cmd) {
    cmd->add_option("--catalog", f.catalog, "Scenario catalog (JSON)");
    cmd->add_option("--config", f.config, "Sweep config supplying labels, phases and ML settings");
  };

  auto* validate = app.add_subcommand("validate", "Check a catalog, a trace or an event log");
  validate->add_option("--catalog", f.catalog, "Scenario catalog (JSON)");
  validate->add_option("--trace", f.trace, "Trace CSV (t,value)");
  validate->add_option("--events", f.events, "Phase event CSV");
  add_metric(validate);

  auto* synth = app.add_subcommand("synth", "Generate a synthetic labelled corpus");
  synth->add_option("--spec", f.spec, "Corpus spec JSON, or 'demo'")->capture_default_str();
  add_seed(synth);
  add_out(synth);

  auto* segment = app.add_subcommand("segment", "Cut traces into phase segments");
  add_corpus(segment);
  segment->add_option("--phase", f.phase, "Phase selector, e.g. 'neural-op' or 'all'")->required();
  segment->add_option("--knowledge", f.knowledge, "Knowledge level (default richest)");
  add_cut(segment);
  add_metric(segment);
  add_out(segment);

  auto* passport = app.add_subcommand("passport", "Build mean passports from Normal scenarios");
  add_corpus(passport);
  passport->add_option("--phase", f.phase, "Phase selector (default every phase type)");
  add_cut(passport);
  add_degree(passport);
  add_metric(passport);
  add_out(passport);

  auto* dataset = app.add_subcommand("dataset", "Extract a feature dataset for one phase selector");
  add_corpus(dataset);
  dataset->add_option("--passports", f.passports, "Passport CSV (built from the corpus when omitted)");
  dataset->add_option("--plan", f.plan, "Degradation plan JSON");
  dataset->add_option("--phase", f.phase, "Phase selector")->required();
  add_cut(dataset);
  add_degree(dataset);
  add_metric(dataset);
  add_seed(dataset);
  add_out(dataset);

  auto* degrade_cmd = app.add_subcommand("degrade", "Apply a degradation plan to a trace");
  degrade_cmd->add_option("--plan", f.plan, "Degradation plan JSON")->required();
  degrade_cmd->add_option("--trace", f.trace, "Trace CSV")->required();
  add_metric(degrade_cmd);
  add_seed(degrade_cmd);
  add_out(degrade_cmd);

  auto* train = app.add_subcommand("train", "Train a classifier on a dataset");
  train->add_option("--dataset", f.dataset, "Dataset CSV")->required();
  train->add_option("--config", f.config, "Sweep config supplying labels and ML settings");
  train->add_option("--algorithm", f.algorithm, "BDT, DT, ET or RF")->check(algorithm_check)->capture_default_str();
  add_seed(train);
  add_workers(train);
  add_out(train);

  auto* eval = app.add_subcommand("eval", "Cross-validate an algorithm, or score a saved model");
  eval->add_option("--dataset", f.dataset, "Dataset CSV")->required();
  eval->add_option("--model", f.model, "Saved model to score instead of cross-validating");
  eval->add_option("--config", f.config, "Sweep config supplying labels, folds and ML settings");
  eval->add_option("--algorithm", f.algorithm, "BDT, DT, ET or RF")->check(algorithm_check)->capture_default_str();
  add_seed(eval);
  add_workers(eval);

  auto* sweep_cmd = app.add_subcommand("sweep", "Run every configured case and write results and reports");
  sweep_cmd->add_option("--config", f.config, "Sweep config JSON")->required();
  sweep_cmd->add_option("--threshold", f.threshold, "Top-result accuracy")->check(CLI::Range(0.0, 1.0));
  add_seed(sweep_cmd);
  add_workers(sweep_cmd);
  add_out(sweep_cmd);

  auto* report = app.add_subcommand("report", "Regenerate reports from a results file");
  report->add_option("--results", f.results, "results.csv from a sweep")->required();
  report->add_option("--config", f.config, "Sweep config supplying position scales and threshold");
  report->add_option("--threshold", f.threshold, "Top-result accuracy")->check(CLI::Range(0.0, 1.0));
  add_out(report);

  std::vector<std::string> argv_store = args.empty() ? std::vector<std::string>{"infopos"} : args;
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kExitOk;
    }
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }
  for (const auto* cmd : app.get_subcommands()) f.command = cmd;

  try {
    if (validate->parsed()) return cmd_validate(f, out);
    if (synth->parsed()) return cmd_synth(f, out);
    if (segment->parsed()) return cmd_segment(f, out);
    if (passport->parsed()) return cmd_passport(f, out);
    if (dataset->parsed()) return cmd_dataset(f, out);
    if (degrade_cmd->parsed()) return cmd_degrade(f, out);
    if (train->parsed()) return cmd_train(f, out);
    if (eval->parsed()) return cmd_eval(f, out);
    if (sweep_cmd->parsed()) return cmd_sweep(f, out);
    if (report->parsed()) return cmd_report(f, out);
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "event=error code=" << to_string(e.code()) << " message=" << quoted(raw_message(e)) << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "event=error code=Internal message=" << quoted(e.what()) << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace infopos::cli

#include "infopos/synth.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "infopos/error.hpp"
#include "infopos/rng.hpp"
#include "json_io.hpp"

namespace infopos {

using nlohmann::json;

void SynthSpec::validate() const {
  auto fail = [](const std::string& msg) { throw Error(Errc::InvalidArgument, "synth spec: " + msg); };
  if (cycles < 1) fail("cycles must be >= 1");
  if (!(sample_rate > 0.0)) fail("sample_rate must be > 0");
  if (phases.empty()) fail("at least one inner phase is required");
  if (!(noise_sigma >= 0.0)) fail("noise_sigma must be >= 0");
  if (!(idle_gap >= 0.0)) fail("idle_gap must be >= 0");
  if (outer_phase.empty()) fail("outer phase name is empty");
  std::set<std::string> names{outer_phase};
  for (const auto& p : phases) {
    if (p.name.empty()) fail("phase name is empty");
    if (!names.insert(p.name).second) fail("duplicate phase name " + p.name);
    if (!(p.duration_mean > 0.0)) fail("duration of " + p.name + " must be > 0");
    if (!(p.duration_sigma >= 0.0)) fail("duration sigma of " + p.name + " must be >= 0");
  }
  for (const auto& [label, list] : effects) {
    for (const auto& e : list) {
      if (label == kNormalLabel && !e.is_zero()) fail("the Normal effect must be all-zero");
      if (e.dip_depth != 0.0 && !(e.dip_period > 0.0)) fail("dip_period must be > 0 for " + label);
      if (!(e.dip_duty >= 0.0 && e.dip_duty <= 1.0)) fail("dip_duty must lie in [0,1]");
      if (!(e.noise_sigma >= 0.0)) fail("effect noise_sigma must be >= 0");
      if (!e.target_phase.empty() && !names.contains(e.target_phase)) {
        fail("effect targets unknown phase " + e.target_phase);
      }
    }
  }
}

namespace {

struct InnerInterval {
  double start;
  double end;
  double cycle_start;
  std::size_t phase;
};

}  // namespace

SynthRun synth_generate(const SynthSpec& spec) {
  spec.validate();

  SynthRun run;
  Rng durations(derive_seed(spec.seed, {1}));
  Rng noise(derive_seed(spec.seed, {2, static_cast<std::uint64_t>(spec.metric)}));

  std::vector<InnerInterval> inner;
  double cursor = 0.0;
  for (int c = 0; c < spec.cycles; ++c) {
    const double cycle_start = cursor;
    run.events.push_back({cycle_start, spec.outer_phase, Boundary::Start, c});
    for (std::size_t p = 0; p < spec.phases.size(); ++p) {
      const auto& tpl = spec.phases[p];
      const double d =
          std::max(tpl.duration_mean + tpl.duration_sigma * durations.normal(), 0.25 * tpl.duration_mean);
      run.events.push_back({cursor, tpl.name, Boundary::Start, c});
      inner.push_back({cursor, cursor + d, cycle_start, p});
      cursor += d;
      run.events.push_back({cursor, tpl.name, Boundary::End, c});
    }
    run.events.push_back({cursor, spec.outer_phase, Boundary::End, c});
    if (c + 1 < spec.cycles) cursor += spec.idle_gap;
  }
  const double t_total = cursor;

  // Events at the same instant: ends first, so the log reads in execution order.
  std::stable_sort(run.events.begin(), run.events.end(), [](const PhaseEvent& a, const PhaseEvent& b) {
    if (a.t != b.t) return a.t < b.t;
    return a.boundary == Boundary::End && b.boundary == Boundary::Start;
  });

  static const std::vector<LabelEffect> kNoEffects;
  const auto found = spec.effects.find(spec.label);
  const auto& label_effects = found == spec.effects.end() ? kNoEffects : found->second;

  auto& trace = run.trace;
  trace.scenario_id = spec.scenario_id;
  trace.metric = spec.metric;
  trace.label = spec.label;

  const bool cumulative = spec.metric == MetricKind::Energy;
  const double dt = 1.0 / spec.sample_rate;
  double energy = 0.0;
  std::size_t cur = 0;
  for (std::size_t k = 0;; ++k) {
    const double t = static_cast<double>(k) / spec.sample_rate;
    if (!(t < t_total)) break;
    while (cur < inner.size() && inner[cur].end <= t) ++cur;

    double value = spec.idle_level;
    double variance = spec.noise_sigma * spec.noise_sigma;
    if (cur < inner.size() && inner[cur].start <= t) {
      const auto& iv = inner[cur];
      const auto& tpl = spec.phases[iv.phase];
      const double u = (t - iv.start) / (iv.end - iv.start);
      value = tpl.base + tpl.slope * u + tpl.curvature * u * u;
      for (const auto& e : label_effects) {
        double ref = 0.0;
        if (e.target_phase.empty() || e.target_phase == spec.outer_phase) {
          ref = iv.cycle_start;
        } else if (e.target_phase == tpl.name) {
          ref = iv.start;
        } else {
          continue;
        }
        const double since = t - ref;
        value += e.drift_per_s * since;
        if (e.dip_depth != 0.0 && std::fmod(since, e.dip_period) < e.dip_duty * e.dip_period) {
          value -= e.dip_depth;
        }
        variance += e.noise_sigma * e.noise_sigma;
      }
    }
    // One draw per sample regardless of sigma keeps the stream aligned across labels.
    const double n = noise.normal();
    double measured = spec.gain * value + spec.offset + std::sqrt(variance) * n;
    if (cumulative) {
      energy += measured * dt;
      measured = energy;
    }
    trace.samples.push_back({t, measured});
  }
  return run;
}

std::vector<SynthScenario> synth_corpus(const CorpusSpec& spec) {
  spec.labels.validate();
  if (spec.batches.empty() || spec.cores.empty() || spec.repetitions.empty() || spec.metrics.empty()) {
    throw Error(Errc::InvalidArgument, "corpus spec: every grid axis needs at least one entry");
  }
  if (spec.cycles_per_repetition < 1) {
    throw Error(Errc::InvalidArgument, "corpus spec: cycles_per_repetition must be >= 1");
  }

  std::vector<SynthScenario> out;
  for (const auto& batch : spec.batches) {
    for (const auto& core : spec.cores) {
      for (int rep : spec.repetitions) {
        for (const auto& label : spec.labels.names) {
          SynthScenario sc;
          sc.meta.scenario_id = batch.name + "-" + core.name + "-r" + std::to_string(rep) + "-" + label;
          sc.meta.input_batch = batch.name;
          sc.meta.core_type = core.name;
          sc.meta.repetition_count = rep;
          sc.meta.label = label;

          SynthSpec run = spec.base;
          run.seed = derive_seed(spec.seed, {hash_string(sc.meta.scenario_id)});
          run.scenario_id = sc.meta.scenario_id;
          run.label = label;
          run.cycles = rep * spec.cycles_per_repetition;
          run.idle_level += batch.level_offset;
          for (auto& p : run.phases) {
            p.base += batch.level_offset;
            p.duration_mean *= core.duration_scale;
            p.duration_sigma *= core.duration_scale;
          }
          for (const auto& channel : spec.metrics) {
            run.metric = channel.kind;
            run.gain = channel.gain;
            run.offset = channel.offset;
            auto generated = synth_generate(run);
            if (sc.events.empty()) sc.events = std::move(generated.events);
            sc.traces.push_back(std::move(generated.trace));
          }
          out.push_back(std::move(sc));
        }
      }
    }
  }
  return out;
}

void write_corpus(const std::vector<SynthScenario>& scenarios, const std::filesystem::path& dir) {
  std::vector<ScenarioMeta> metas;
  for (const auto& sc : scenarios) {
    ScenarioMeta meta = sc.meta;
    meta.traces.clear();
    for (const auto& trace : sc.traces) {
      const auto file = dir / "traces" / (sc.meta.scenario_id + "_" + std::string(to_string(trace.metric)) + ".csv");
      write_trace_csv(trace.samples, file);
      meta.traces[trace.metric] = file;
    }
    meta.events = dir / "events" / (sc.meta.scenario_id + ".csv");
    write_phase_events_csv(sc.events, meta.events);
    metas.push_back(std::move(meta));
  }
  write_catalog(metas, dir / "catalog.json");
}

Corpus to_corpus(const std::vector<SynthScenario>& scenarios) {
  Corpus corpus;
  for (const auto& sc : scenarios) {
    ScenarioRun run;
    run.meta = sc.meta;
    run.traces = sc.traces;
    run.intervals = pair_phase_events(sc.events);
    corpus.runs.push_back(std::move(run));
  }
  return corpus;
}

CorpusSpec demo_corpus_spec() {
  CorpusSpec spec;
  spec.seed = 2025;
  spec.batches = {{"batch1", 0.0}, {"batch2", 0.05}};
  spec.cores = {{"core1", 1.0}, {"core2", 0.8}};
  spec.repetitions = {1, 2};
  spec.cycles_per_repetition = 10;
  spec.metrics = {{MetricKind::Current, 1.0, 0.0}, {MetricKind::Power, 5.0, 0.2}};

  auto& base = spec.base;
  base.outer_phase = "cycle-op";
  base.sample_rate = 200.0;
  base.noise_sigma = 0.02;
  base.idle_gap = 0.05;
  base.idle_level = 0.8;
  base.phases = {{"image-op", 0.30, 0.02, 1.2, 0.10, 0.0},
                 {"neural-op", 0.60, 0.03, 2.0, 0.30, -0.20}};

  LabelEffect fan_inner;
  fan_inner.target_phase = "neural-op";
  fan_inner.drift_per_s = 0.25;
  LabelEffect fan_outer;
  fan_outer.drift_per_s = 0.03;
  base.effects["NoFan"] = {fan_inner, fan_outer};

  LabelEffect volt_inner;
  volt_inner.target_phase = "neural-op";
  volt_inner.dip_depth = 0.08;
  volt_inner.dip_period = 0.1;
  LabelEffect volt_image;
  volt_image.target_phase = "image-op";
  volt_image.dip_depth = 0.02;
  volt_image.dip_period = 0.1;
  base.effects["UnderVolt"] = {volt_inner, volt_image};
  return spec;
}

namespace detail {

CorpusSpec corpus_spec_from_json(const json& j) {
  CorpusSpec spec;
  spec.seed = j.value("seed", spec.seed);
  spec.cycles_per_repetition = j.value("cycles_per_repetition", spec.cycles_per_repetition);
  if (j.contains("repetitions")) spec.repetitions = j.at("repetitions").get<std::vector<int>>();
  if (j.contains("labels")) spec.labels.names = j.at("labels").get<std::vector<std::string>>();
  for (const auto& b : j.at("batches")) {
    spec.batches.push_back({b.at("name").get<std::string>(), b.value("level_offset", 0.0)});
  }
  for (const auto& c : j.at("cores")) {
    spec.cores.push_back({c.at("name").get<std::string>(), c.value("duration_scale", 1.0)});
  }
  if (j.contains("metrics")) {
    spec.metrics.clear();
    for (const auto& m : j.at("metrics")) {
      spec.metrics.push_back(
          {parse_metric(m.at("kind").get<std::string>()), m.value("gain", 1.0), m.value("offset", 0.0)});
    }
  }
  auto& base = spec.base;
  base.outer_phase = j.value("outer_phase", base.outer_phase);
  base.sample_rate = j.value("sample_rate", base.sample_rate);
  base.noise_sigma = j.value("noise_sigma", base.noise_sigma);
  base.idle_gap = j.value("idle_gap", base.idle_gap);
  base.idle_level = j.value("idle_level", base.idle_level);
  for (const auto& p : j.at("phases")) {
    PhaseTemplate tpl;
    tpl.name = p.at("name").get<std::string>();
    tpl.duration_mean = p.at("duration_mean").get<double>();
    tpl.duration_sigma = p.value("duration_sigma", 0.0);
    tpl.base = p.value("base", 1.0);
    tpl.slope = p.value("slope", 0.0);
    tpl.curvature = p.value("curvature", 0.0);
    base.phases.push_back(tpl);
  }
  if (j.contains("effects")) {
    for (const auto& [label, list] : j.at("effects").items()) {
      auto& effects = base.effects[label];
      for (const auto& e : list) {
        LabelEffect fx;
        fx.target_phase = e.value("target_phase", "");
        fx.drift_per_s = e.value("drift_per_s", 0.0);
        fx.dip_depth = e.value("dip_depth", 0.0);
        fx.dip_period = e.value("dip_period", 0.0);
        fx.dip_duty = e.value("dip_duty", 0.5);
        fx.noise_sigma = e.value("noise_sigma", 0.0);
        effects.push_back(fx);
      }
    }
  }
  return spec;
}

json corpus_spec_to_json(const CorpusSpec& spec) {
  json j;
  j["seed"] = spec.seed;
  j["cycles_per_repetition"] = spec.cycles_per_repetition;
  j["repetitions"] = spec.repetitions;
  j["labels"] = spec.labels.names;
  j["batches"] = json::array();
  for (const auto& b : spec.batches) j["batches"].push_back({{"name", b.name}, {"level_offset", b.level_offset}});
  j["cores"] = json::array();
  for (const auto& c : spec.cores) j["cores"].push_back({{"name", c.name}, {"duration_scale", c.duration_scale}});
  j["metrics"] = json::array();
  for (const auto& m : spec.metrics) {
    j["metrics"].push_back({{"kind", std::string(to_string(m.kind))}, {"gain", m.gain}, {"offset", m.offset}});
  }
  const auto& base = spec.base;
  j["outer_phase"] = base.outer_phase;
  j["sample_rate"] = base.sample_rate;
  j["noise_sigma"] = base.noise_sigma;
  j["idle_gap"] = base.idle_gap;
  j["idle_level"] = base.idle_level;
  j["phases"] = json::array();
  for (const auto& p : base.phases) {
    j["phases"].push_back({{"name", p.name},
                           {"duration_mean", p.duration_mean},
                           {"duration_sigma", p.duration_sigma},
                           {"base", p.base},
                           {"slope", p.slope},
                           {"curvature", p.curvature}});
  }
  j["effects"] = json::object();
  for (const auto& [label, list] : base.effects) {
    json arr = json::array();
    for (const auto& e : list) {
      arr.push_back({{"target_phase", e.target_phase},
                     {"drift_per_s", e.drift_per_s},
                     {"dip_depth", e.dip_depth},
                     {"dip_period", e.dip_period},
                     {"dip_duty", e.dip_duty},
                     {"noise_sigma", e.noise_sigma}});
    }
    j["effects"][label] = arr;
  }
  return j;
}

}  // namespace detail

CorpusSpec parse_corpus_spec(std::string_view json_text) {
  try {
    return detail::corpus_spec_from_json(json::parse(json_text));
  } catch (const json::exception& e) {
    throw ParseError(0, std::string("corpus spec: ") + e.what());
  }
}

std::string corpus_spec_to_json(const CorpusSpec& spec) {
  return detail::corpus_spec_to_json(spec).dump(2) + "\n";
}

}  // namespace infopos

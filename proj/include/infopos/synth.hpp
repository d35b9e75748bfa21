#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "infopos/ingest.hpp"
#include "infopos/trace_core.hpp"

namespace infopos {

// Baseline shape of one inner phase, over normalized phase time u in [0,1):
// base + slope*u + curvature*u^2 (metric units).
struct PhaseTemplate {
  std::string name;
  double duration_mean = 0.5;   // seconds
  double duration_sigma = 0.0;  // seconds
  double base = 1.0;
  double slope = 0.0;
  double curvature = 0.0;
};

// Anomaly signature layered over the Normal baseline. An empty target applies
// it across the whole cycle, otherwise only inside the named phase. Time for
// drift and dips counts from the start of the targeted interval.
struct LabelEffect {
  std::string target_phase;
  double drift_per_s = 0.0;  // linear upward drift (cooling-failure analog)
  double dip_depth = 0.0;    // periodic square dips (under-volt analog)
  double dip_period = 0.0;   // seconds
  double dip_duty = 0.5;     // fraction of each period spent in the dip
  double noise_sigma = 0.0;  // extra Gaussian noise

  bool is_zero() const {
    return drift_per_s == 0.0 && dip_depth == 0.0 && noise_sigma == 0.0;
  }
};

struct SynthSpec {
  std::uint64_t seed = 0;
  int cycles = 1;
  std::string scenario_id = "synth";
  std::string outer_phase = "cycle-op";
  std::vector<PhaseTemplate> phases;  // inner phases, executed in order each cycle
  double idle_gap = 0.0;              // seconds between cycles
  double idle_level = 0.0;
  double sample_rate = 100.0;  // Hz
  double noise_sigma = 0.0;
  MetricKind metric = MetricKind::Current;
  double gain = 1.0;  // channel scaling, applied before noise
  double offset = 0.0;
  Label label{kNormalLabel};
  std::map<Label, std::vector<LabelEffect>> effects;

  void validate() const;  // throws InvalidArgument
};

struct SynthRun {
  MetricTrace trace;
  std::vector<PhaseEvent> events;
};

// Deterministic for a fixed spec. Two independent streams are derived from
// the seed: one for phase durations (shared by all metrics of a run), one
// for measurement noise (per metric). Energy channels are emitted as the
// running integral of the generated power-like signal.
SynthRun synth_generate(const SynthSpec& spec);

struct BatchVariant {
  std::string name;
  double level_offset = 0.0;
};

struct CoreVariant {
  std::string name;
  double duration_scale = 1.0;
};

struct MetricChannel {
  MetricKind kind = MetricKind::Current;
  double gain = 1.0;
  double offset = 0.0;
};

// Scenario grid: batches x cores x repetition counts x labels.
struct CorpusSpec {
  std::uint64_t seed = 1;
  SynthSpec base;  // phases, rates, noise, effects; seed/label/cycles are overridden
  std::vector<BatchVariant> batches;
  std::vector<CoreVariant> cores;
  std::vector<int> repetitions{1};
  int cycles_per_repetition = 10;
  LabelSet labels;
  std::vector<MetricChannel> metrics{{MetricKind::Current, 1.0, 0.0}};

  std::size_t scenario_count() const {
    return batches.size() * cores.size() * repetitions.size() * labels.names.size();
  }
};

struct SynthScenario {
  ScenarioMeta meta;
  std::vector<MetricTrace> traces;
  std::vector<PhaseEvent> events;
};

std::vector<SynthScenario> synth_corpus(const CorpusSpec& spec);

// Writes catalog.json, traces/<id>_<metric>.csv and events/<id>.csv under dir.
void write_corpus(const std::vector<SynthScenario>& scenarios, const std::filesystem::path& dir);
Corpus to_corpus(const std::vector<SynthScenario>& scenarios);

// Demonstrator-like grid: 2 batches x 2 core types x 2 repetition counts x
// {Normal, NoFan, UnderVolt} with cycle-op > {image-op, neural-op}.
CorpusSpec demo_corpus_spec();

CorpusSpec parse_corpus_spec(std::string_view json_text);
std::string corpus_spec_to_json(const CorpusSpec& spec);

}  // namespace infopos

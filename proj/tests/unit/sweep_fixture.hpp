#pragma once

#include "infopos/sweep.hpp"

namespace testing {

// A quick sweep over a reduced demo corpus: 3 cycles per repetition,
// current only, small ensembles.
inline infopos::sweep::SweepConfig small_sweep_config() {
  using namespace infopos;
  sweep::SweepConfig c;
  auto spec = demo_corpus_spec();
  spec.cycles_per_repetition = 3;
  spec.metrics = {{MetricKind::Current, 1.0, 0.0}};
  c.synth = spec;
  c.knowledge = {"Rich"};
  c.selectors = {"cycle-op", "neural-op"};
  c.cuts = {CutKind::Full, CutKind::Mid};
  c.degrees = {1};
  c.data_positions = {DegradationPlan{}};
  c.ml.forest.n_trees = 10;
  c.ml.boost.n_rounds = 10;
  c.seed = 5;
  return c;
}

}  // namespace testing

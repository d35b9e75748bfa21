// Serial reference vs OpenMP kernels. Each pair must agree; the timings
// are printed as CSV: kernel,variant,workers,seconds,speedup.
//
//   infopos_bench [repeats] [workers]

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "infopos/ml.hpp"
#include "infopos/passport.hpp"
#include "infopos/sweep.hpp"
#include "infopos/synth.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace infopos;

namespace {

template <class F>
double best_of(int repeats, F&& f) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

void row(const char* kernel, double serial, double parallel, int workers, bool agree) {
  std::cout << kernel << ",serial,1," << serial << ",1\n";
  std::cout << kernel << ",openmp," << workers << "," << parallel << "," << serial / parallel << "\n";
  if (!agree) {
    std::cerr << kernel << ": serial and parallel results differ\n";
    std::exit(1);
  }
}

std::vector<Segment> bench_segments() {
  auto spec = demo_corpus_spec();
  spec.cycles_per_repetition = 20;
  std::vector<Segment> out;
  for (const auto& run : to_corpus(synth_corpus(spec)).runs) {
    for (const auto& trace : run.traces) {
      for (const char* phase : {"cycle-op", "image-op", "neural-op"}) {
        auto s = informed_cut(trace, run.intervals, phase);
        out.insert(out.end(), s.begin(), s.end());
      }
    }
  }
  return out;
}

ml::TrainingSet bench_training_set() {
  sweep::SweepConfig c;
  c.synth = demo_corpus_spec();
  c.knowledge = {"Rich"};
  c.selectors = {"all"};
  c.data_positions = {DegradationPlan{}};
  const auto corpus = sweep::load_sweep_corpus(c);
  const auto depths = sweep::corpus_phase_depths(corpus);
  const auto cases = sweep::enumerate_cases(c, depths);
  const auto store = sweep::build_passport_store(c, corpus, cases, depths);
  return ml::from_dataset(sweep::build_case_dataset(cases.front(), c, corpus, store, depths), c.labels.names);
}

}  // namespace


int main(int argc, char** argv) {
  const int repeats = argc > 1 ? std::atoi(argv[1]) : 3;
#ifdef _OPENMP
  const int workers = argc > 2 ? std::atoi(argv[2]) : omp_get_max_threads();
#else
  const int workers = 1;
#endif
  std::cout << "kernel,variant,workers,seconds,speedup\n";

  const auto segments = bench_segments();
  std::vector<RegressionSignature> a, b;
  const double fs = best_of(repeats, [&] { a = fit_signatures_serial(segments, 2); });
  const double fp = best_of(repeats, [&] { b = fit_signatures(segments, 2, workers); });
  row("fit_signatures", fs, fp, workers, a == b);

  const auto data = bench_training_set();
  ml::EnsembleParams ep;
  const ml::TreeParams tp{8, 2, ml::FeatureSubset::Sqrt};
  ml::Model ms, mp;
  const double rs = best_of(repeats, [&] { ms = ml::train_random_forest_serial(data, ep, tp, 1); });
  const double rp = best_of(repeats, [&] { mp = ml::train_random_forest(data, ep, tp, 1, workers); });
  row("random_forest", rs, rp, workers, ms == mp);

  sweep::SweepConfig c;
  c.synth = demo_corpus_spec();
  c.knowledge = {"Rich"};
  c.selectors = {"cycle-op", "neural-op"};
  c.degrees = {2};
  c.data_positions = {DegradationPlan{}};
  c.workers = workers;
  const auto corpus = sweep::load_sweep_corpus(c);
  std::string ss, sp;
  const double ws = best_of(1, [&] { ss = sweep::format_results_csv(sweep::run_sweep_serial(c, corpus).results); });
  const double wp = best_of(1, [&] { sp = sweep::format_results_csv(sweep::run_sweep(c, corpus).results); });
  row("sweep", ws, wp, workers, ss == sp);
  return 0;
}

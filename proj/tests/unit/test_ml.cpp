#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "infopos/ml.hpp"
#include "oracles/blobs.hpp"
#include "oracles/split_oracle.hpp"
#include "support.hpp"

using namespace infopos;
using namespace infopos::ml;
using testing::error_code_of;

namespace {

TrainingSet make_set(const std::vector<std::vector<double>>& x, const std::vector<int>& y, int n_classes) {
  TrainingSet t;
  t.x.rows = x.size();
  t.x.cols = x.empty() ? 0 : x[0].size();
  for (const auto& r : x) t.x.data.insert(t.x.data.end(), r.begin(), r.end());
  t.y = y;
  for (int c = 0; c < n_classes; ++c) t.classes.push_back("c" + std::to_string(c));
  return t;
}

TrainingSet blob_set(const oracle::Blobs& b) { return make_set(b.x, b.y, 3); }

double train_accuracy(const Model& m, const TrainingSet& t) {
  const auto p = predict_indices(m, t.x);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < p.size(); ++i) ok += p[i] == t.y[i];
  return static_cast<double>(ok) / static_cast<double>(p.size());
}

// Same shape, node for node, as the oracle tree.
void check_matches_oracle(const Tree& tree, const std::vector<oracle::OracleNode>& nodes) {
  REQUIRE(tree.nodes.size() == nodes.size());
  // Both builders number nodes in pre-order.
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& a = tree.nodes[i];
    const auto& b = nodes[i];
    CHECK(a.feature == b.feature);
    if (b.feature >= 0) {
      CHECK(a.threshold == b.threshold);
      CHECK(a.left == b.left);
      CHECK(a.right == b.right);
    } else {
      CHECK(a.label == b.label);
    }
  }
}

}  // namespace

TEST_CASE("four-row toy tree") {
  const std::vector<std::vector<double>> x{{0}, {1}, {2}, {3}};
  const std::vector<int> y{0, 0, 1, 1};
  const auto data = make_set(x, y, 2);
  const auto m = train_decision_tree(data, {}, 0);
  REQUIRE(m.trees.size() == 1);
  const auto& root = m.trees[0].nodes[0];
  CHECK(root.feature == 0);
  CHECK(root.threshold == 1.5);
  CHECK(m.trees[0].depth() == 1);
  CHECK(train_accuracy(m, data) == 1.0);

  oracle::ExhaustiveTree o(x, y, 2, 8);
  check_matches_oracle(m.trees[0], o.nodes());
}

TEST_CASE("XOR tree") {
  const std::vector<std::vector<double>> x{{0, 0}, {0, 1}, {1, 0}, {1, 1}, {0, 0}, {1, 1}, {0, 1}, {1, 0}};
  const std::vector<int> y{0, 1, 1, 0, 0, 0, 1, 1};
  const auto data = make_set(x, y, 2);
  const auto m = train_decision_tree(data, {2, 2, FeatureSubset::All}, 0);
  CHECK(train_accuracy(m, data) == 1.0);
  CHECK(oracle::best_depth2_accuracy(x, y, 2) == 1.0);
  oracle::ExhaustiveTree o(x, y, 2, 2);
  check_matches_oracle(m.trees[0], o.nodes());
}

TEST_CASE("trees match the exhaustive oracle on random data") {
  Rng rng(8);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    const std::size_t n = 10 + rng.below(40);
    for (std::size_t i = 0; i < n; ++i) {
      // Coarse values force ties between candidate splits.
      x.push_back({static_cast<double>(rng.below(5)), static_cast<double>(rng.below(4)),
                   static_cast<double>(rng.below(6)) / 2.0});
      y.push_back(static_cast<int>(rng.below(3)));
    }
    const auto data = make_set(x, y, 3);
    const int depth = 1 + static_cast<int>(rng.below(4));
    const auto m = train_decision_tree(data, {depth, 2, FeatureSubset::All}, 0);
    oracle::ExhaustiveTree o(x, y, 3, depth);
    check_matches_oracle(m.trees[0], o.nodes());
  }
}

TEST_CASE("best_gini_split beats every other candidate") {
  Rng rng(12);
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  for (int i = 0; i < 60; ++i) {
    x.push_back({rng.uniform(), rng.uniform(), static_cast<double>(rng.below(3))});
    y.push_back(x.back()[0] + 0.3 * rng.normal() > 0.5 ? 1 : 0);
  }
  const auto data = make_set(x, y, 2);
  std::vector<std::size_t> rows(60);
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  const auto best = best_gini_split(data, rows);
  REQUIRE(best.feature >= 0);
  CHECK(best.impurity_decrease > 0.0);

  oracle::ExhaustiveTree o(x, y, 2, 0);
  auto score = [&](int f, double thr) {
    std::vector<std::size_t> l, r;
    for (auto i : rows) (x[i][static_cast<std::size_t>(f)] <= thr ? l : r).push_back(i);
    return o.impurity(l, r);
  };
  const auto chosen = score(best.feature, best.threshold);
  for (int f = 0; f < 3; ++f) {
    std::set<double> v;
    for (const auto& r : x) v.insert(r[static_cast<std::size_t>(f)]);
    std::vector<double> s(v.begin(), v.end());
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
      CHECK_FALSE(score(f, (s[i] + s[i + 1]) / 2) < chosen);
    }
  }

  const std::vector<std::size_t> two{0, 1};
  const auto pure = best_gini_split(make_set({{1}, {2}}, {0, 0}, 1), two);
  CHECK(pure.feature == 0);
  CHECK(pure.impurity_decrease == 0.0);
  CHECK(best_gini_split(make_set({{1}, {1}}, {0, 1}, 2), two).feature == -1);
}

TEST_CASE("degenerate inputs") {
  const auto one = make_set({{1}, {2}, {3}}, {0, 0, 0}, 1);
  for (auto alg : kAllAlgorithms) {
    const auto m = make_factory(alg, MlConfig{})(one, 1);
    const auto p = predict(m, one.x);
    CHECK(p == std::vector<std::string>{"c0", "c0", "c0"});
  }
  CHECK(train_decision_tree(one, {}, 0).trees[0].nodes.size() == 1);

  const auto empty = make_set({}, {}, 2);
  CHECK(error_code_of([&] { train_decision_tree(empty, {}, 0); }) == Errc::DegenerateDataset);

  const auto data = make_set({{0}, {1}}, {0, 1}, 2);
  const auto m = train_decision_tree(data, {}, 0);
  CHECK(predict(m, Matrix{0, 1, {}}).empty());
  CHECK(error_code_of([&] { predict(m, Matrix{1, 2, {0, 0}}); }) == Errc::SchemaMismatch);

  CHECK(error_code_of([] { TreeParams{0, 2}.validate(); }) == Errc::InvalidArgument);
  CHECK(error_code_of([] { TreeParams{3, 1}.validate(); }) == Errc::InvalidArgument);
  EnsembleParams e;
  e.learning_rate = 0;
  CHECK(error_code_of([&] { e.validate(); }) == Errc::InvalidArgument);
  e = EnsembleParams{};
  e.n_trees = 0;
  CHECK(error_code_of([&] { e.validate(); }) == Errc::InvalidArgument);
}

TEST_CASE("a one-tree forest without bootstrap is a decision tree") {
  const auto b = oracle::make_blobs(40, 3, 4, 2.0, 1.0, 5);
  const auto data = blob_set(b);
  TreeParams tp{6, 2, FeatureSubset::All};
  EnsembleParams ep;
  ep.n_trees = 1;
  ep.bootstrap = false;
  const auto rf = train_random_forest(data, ep, tp, 3);
  const auto dt = train_decision_tree(data, tp, 3);
  CHECK(predict_indices(rf, data.x) == predict_indices(dt, data.x));
  CHECK(rf.trees[0] == dt.trees[0]);
}

TEST_CASE("separable blobs") {
  const auto b = oracle::make_blobs(50, 3, 3, 8.0, 1.0, 21);
  REQUIRE(oracle::separation_in_sigmas(b) >= 3.0);
  const auto data = blob_set(b);
  REQUIRE(data.size() == 150);
  MlConfig cfg;
  cfg.forest.n_trees = 30;
  cfg.boost.n_rounds = 30;
  for (auto alg : kAllAlgorithms) {
    const auto stats = evaluate(make_factory(alg, cfg), data, 3, 7);
    CHECK_MESSAGE(stats.mean_accuracy >= 0.95, to_string(alg));
    CHECK(stats.accuracies.size() == 3);
  }
}

TEST_CASE("training is deterministic and parallel forests equal serial ones") {
  const auto b = oracle::make_blobs(40, 3, 4, 1.5, 1.0, 9);
  const auto data = blob_set(b);
  const auto probe = blob_set(oracle::make_blobs(10, 3, 4, 1.5, 1.0, 10));
  MlConfig cfg;
  cfg.forest.n_trees = 25;
  cfg.boost.n_rounds = 10;
  for (auto alg : kAllAlgorithms) {
    const auto f = make_factory(alg, cfg);
    CHECK(predict_indices(f(data, 4), probe.x) == predict_indices(f(data, 4), probe.x));
  }
  EnsembleParams ep;
  ep.n_trees = 25;
  const TreeParams tp{8, 2, FeatureSubset::Sqrt};
  const auto serial = train_random_forest_serial(data, ep, tp, 77);
  CHECK(train_random_forest(data, ep, tp, 77, 4) == serial);
  CHECK(train_random_forest(data, ep, tp, 77, 1) == serial);
  ep.bootstrap = false;
  ep.random_thresholds = true;
  CHECK(train_extra_trees(data, ep, tp, 5, 4) == train_extra_trees(data, ep, tp, 5, 1));
}

TEST_CASE("monotone feature transforms leave tree predictions unchanged") {
  const auto b = oracle::make_blobs(30, 3, 3, 1.0, 1.0, 13);
  const auto data = blob_set(b);
  auto warped = data;
  for (std::size_t i = 0; i < warped.x.data.size(); ++i) {
    const double v = warped.x.data[i];
    warped.x.data[i] = i % 3 == 0 ? std::exp(v) : i % 3 == 1 ? 3 * v - 7 : v * v * v;
  }
  const auto a = train_decision_tree(data, {}, 0);
  const auto c = train_decision_tree(warped, {}, 0);
  CHECK(predict_indices(a, data.x) == predict_indices(c, warped.x));
}

TEST_CASE("ensembles improve with more trees") {
  // Overlapping blobs so small ensembles still make mistakes.
  const auto train = blob_set(oracle::make_blobs(60, 3, 4, 2.0, 1.0, 31));
  const auto test = blob_set(oracle::make_blobs(100, 3, 4, 2.0, 1.0, 32));
  auto accuracy = [&](const Model& m) { return train_accuracy(m, test); };
  const int sizes[] = {1, 5, 20, 50};
  for (auto alg : {Algorithm::RF, Algorithm::ET, Algorithm::BDT}) {
    std::vector<double> mean;
    for (int n : sizes) {
      double sum = 0;
      for (std::uint64_t seed = 0; seed < 10; ++seed) {
        MlConfig cfg;
        cfg.forest.n_trees = n;
        cfg.boost.n_rounds = n;
        sum += accuracy(make_factory(alg, cfg)(train, seed));
      }
      mean.push_back(sum / 10);
    }
    int inversions = 0;
    for (std::size_t i = 1; i < mean.size(); ++i) inversions += mean[i] < mean[i - 1];
    INFO(to_string(alg), " ", mean[0], " ", mean[1], " ", mean[2], " ", mean[3]);
    CHECK(inversions <= 1);
    CHECK(mean.back() >= mean.front());
  }
}

TEST_CASE("stratified folds") {
  const std::vector<int> y{0, 0, 0, 1, 1, 1, 2, 2, 2};
  const auto folds = stratified_kfold(y, 3, 1);
  REQUIRE(folds.size() == 3);
  std::set<std::size_t> seen;
  for (const auto& f : folds) {
    REQUIRE(f.test.size() == 3);
    std::set<int> classes;
    for (auto i : f.test) classes.insert(y[i]);
    CHECK(classes.size() == 3);
    CHECK(f.train.size() == 6);
    for (auto i : f.test) {
      CHECK(std::find(f.train.begin(), f.train.end(), i) == f.train.end());
      seen.insert(i);
    }
  }
  CHECK(seen.size() == 9);

  std::vector<int> big;
  for (int i = 0; i < 300; ++i) big.push_back(i % 3);
  const auto a = stratified_kfold(big, 3, 42);
  const auto b = stratified_kfold(big, 3, 42);
  for (std::size_t f = 0; f < 3; ++f) CHECK(a[f].test == b[f].test);

  CHECK(error_code_of([] {
          const std::vector<int> small{0, 0, 1};
          stratified_kfold(small, 3, 0);
        }) == Errc::ClassTooSmall);
}

TEST_CASE("grouped folds keep groups together") {
  std::vector<int> y;
  std::vector<std::string> g;
  for (int s = 0; s < 12; ++s) {
    for (int r = 0; r < 5; ++r) {
      y.push_back(s % 3);
      g.push_back("scn" + std::to_string(s));
    }
  }
  const auto folds = grouped_kfold(y, g, 3, 4);
  REQUIRE(folds.size() == 3);
  for (const auto& f : folds) {
    std::set<std::string> test_groups, train_groups;
    for (auto i : f.test) test_groups.insert(g[i]);
    for (auto i : f.train) train_groups.insert(g[i]);
    for (const auto& t : test_groups) CHECK_FALSE(train_groups.contains(t));
    CHECK(test_groups.size() == 4);
  }
  g[0] = "scn1";  // now scn1 mixes labels 0 and 1
  CHECK(error_code_of([&] { grouped_kfold(y, g, 3, 4); }) == Errc::InvalidArgument);
}

TEST_CASE("scores and fold statistics") {
  // Confusion [[2,1],[0,3]]: rows truth, columns prediction.
  const std::vector<int> truth{0, 0, 0, 1, 1, 1};
  const std::vector<int> pred{0, 0, 1, 1, 1, 1};
  const auto m = score_predictions(truth, pred, 2);
  CHECK(m.accuracy == doctest::Approx(5.0 / 6.0).epsilon(1e-15));
  CHECK(m.macro_f1 == doctest::Approx(0.8285714285714285).epsilon(1e-15));
  CHECK(m.macro_f1 == doctest::Approx((0.8 + 0.8571428571428571) / 2).epsilon(1e-15));

  const auto perfect = score_predictions(truth, truth, 2);
  CHECK(perfect.accuracy == 1.0);
  CHECK(perfect.macro_f1 == 1.0);

  const auto flat = summarize({0.99, 0.99, 0.99}, {0.9, 0.9, 0.9});
  CHECK(flat.cv_percent == 0.0);
  CHECK(flat.mean_accuracy == doctest::Approx(0.99));
  const auto spread = summarize({0.8, 0.9, 1.0}, {0.8, 0.9, 1.0});
  CHECK(spread.cv_percent == doctest::Approx(std::sqrt(0.02 / 3) / 0.9 * 100));
}

TEST_CASE("evaluate with a perfect classifier") {
  const auto data = blob_set(oracle::make_blobs(10, 3, 3, 20.0, 0.1, 3));
  const ModelFactory oracle_model = [&](const TrainingSet& train, std::uint64_t) {
    return train_decision_tree(train, {}, 0);
  };
  const auto s = evaluate(oracle_model, data, 3, 1);
  CHECK(s.mean_accuracy == 1.0);
  CHECK(s.mean_f1 == 1.0);
  CHECK(s.cv_percent == 0.0);
}

TEST_CASE("model JSON round trip") {
  const auto data = blob_set(oracle::make_blobs(20, 3, 3, 2.0, 1.0, 2));
  MlConfig cfg;
  cfg.forest.n_trees = 5;
  cfg.boost.n_rounds = 5;
  testing::TempDir dir;
  for (auto alg : kAllAlgorithms) {
    const auto m = make_factory(alg, cfg)(data, 11);
    CHECK(model_from_json(model_to_json(m)) == m);
    write_model(m, dir / "m.json");
    CHECK(read_model(dir / "m.json") == m);
  }
  CHECK(error_code_of([] { model_from_json("{not json"); }) == Errc::ParseError);
  CHECK(error_code_of([] { model_from_json("{\"format\":\"nope\"}"); }) == Errc::SchemaMismatch);
}

TEST_CASE("from_dataset and the registry") {
  Dataset d;
  for (const char* l : {"NoFan", "Normal", "NoFan"}) {
    FeatureRow r;
    r.label = l;
    r.provenance.scenario_id = std::string("s") + l;
    d.rows.push_back(r);
  }
  const auto t = from_dataset(d, {"Normal", "NoFan", "UnderVolt"});
  CHECK(t.classes == std::vector<std::string>{"Normal", "NoFan"});
  CHECK(t.y == std::vector<int>{1, 0, 1});
  CHECK(t.x.cols == kFeatureCount);
  CHECK(t.groups.size() == 3);
  CHECK(from_dataset(d).classes == std::vector<std::string>{"NoFan", "Normal"});

  auto reg = AlgorithmRegistry::with_builtins(MlConfig{});
  CHECK(reg.names() == std::vector<std::string>{"BDT", "DT", "ET", "RF"});
  CHECK(error_code_of([&] { reg.at("SVM"); }) == Errc::InvalidArgument);
  reg.add("SVM", make_factory(Algorithm::DT, MlConfig{}));
  CHECK(reg.contains("SVM"));
  CHECK(parse_algorithm("bdt") == Algorithm::BDT);
}

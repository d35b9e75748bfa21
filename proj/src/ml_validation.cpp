#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>

#include "infopos/error.hpp"
#include "infopos/ml.hpp"
#include "infopos/rng.hpp"

namespace infopos::ml {

TrainingSet TrainingSet::subset(std::span<const std::size_t> rows) const {
  TrainingSet out;
  out.classes = classes;
  out.source_hash = source_hash;
  out.x.cols = x.cols;
  out.x.rows = rows.size();
  out.x.data.reserve(rows.size() * x.cols);
  for (auto r : rows) {
    const auto row = x.row(r);
    out.x.data.insert(out.x.data.end(), row.begin(), row.end());
    out.y.push_back(y[r]);
    if (!groups.empty()) out.groups.push_back(groups[r]);
  }
  return out;
}

TrainingSet from_dataset(const Dataset& dataset, const std::vector<std::string>& label_order) {
  std::vector<std::string> present;
  for (const auto& row : dataset.rows) {
    if (std::find(present.begin(), present.end(), row.label) == present.end()) present.push_back(row.label);
  }
  TrainingSet out;
  for (const auto& l : label_order) {
    if (std::find(present.begin(), present.end(), l) != present.end()) out.classes.push_back(l);
  }
  for (const auto& l : present) {
    if (std::find(out.classes.begin(), out.classes.end(), l) == out.classes.end()) out.classes.push_back(l);
  }
  out.x.rows = dataset.rows.size();
  out.x.cols = kFeatureCount;
  out.x.data.reserve(out.x.rows * out.x.cols);
  bool have_groups = true;
  for (const auto& row : dataset.rows) {
    const auto f = row.features();
    out.x.data.insert(out.x.data.end(), f.begin(), f.end());
    const auto it = std::find(out.classes.begin(), out.classes.end(), row.label);
    out.y.push_back(static_cast<int>(it - out.classes.begin()));
    out.groups.push_back(row.provenance.scenario_id);
    have_groups = have_groups && !row.provenance.scenario_id.empty();
  }
  if (!have_groups) out.groups.clear();
  out.source_hash = hash_string(format_dataset_csv(dataset));
  return out;
}

std::string_view to_string(Algorithm a) noexcept {
  switch (a) {
    case Algorithm::BDT: return "BDT";
    case Algorithm::DT: return "DT";
    case Algorithm::ET: return "ET";
    case Algorithm::RF: return "RF";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view name) {
  std::string upper(name);
  for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (auto a : kAllAlgorithms) {
    if (to_string(a) == upper) return a;
  }
  throw Error(Errc::InvalidArgument, "unknown algorithm '" + std::string(name) + "'");
}

namespace {

void check_k(int k) {
  if (k < 2) throw Error(Errc::InvalidArgument, "fold count must be >= 2");
}

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

std::vector<Fold> folds_from_assignment(const std::vector<int>& fold_of, int k) {
  std::vector<Fold> folds(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    for (int f = 0; f < k; ++f) {
      auto& fold = folds[static_cast<std::size_t>(f)];
      (fold_of[i] == f ? fold.test : fold.train).push_back(i);
    }
  }
  return folds;
}

int class_count(std::span<const int> labels) {
  int n = 0;
  for (int l : labels) {
    if (l < 0) throw Error(Errc::InvalidArgument, "negative class index");
    n = std::max(n, l + 1);
  }
  return n;
}

}  // namespace

std::vector<Fold> stratified_kfold(std::span<const int> labels, int k, std::uint64_t seed) {
  check_k(k);
  const int n_classes = class_count(labels);
  std::vector<int> fold_of(labels.size(), -1);
  std::size_t offset = 0;
  for (int c = 0; c < n_classes; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == c) members.push_back(i);
    }
    if (members.empty()) continue;
    if (members.size() < static_cast<std::size_t>(k)) {
      throw Error(Errc::ClassTooSmall, "class " + std::to_string(c) + " has " + std::to_string(members.size()) +
                                           " rows, fewer than " + std::to_string(k) + " folds");
    }
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(c)}));
    shuffle(members, rng);
    for (std::size_t j = 0; j < members.size(); ++j) {
      fold_of[members[j]] = static_cast<int>((offset + j) % static_cast<std::size_t>(k));
    }
    offset += members.size();
  }
  return folds_from_assignment(fold_of, k);
}

std::vector<Fold> grouped_kfold(std::span<const int> labels, std::span<const std::string> groups, int k,
                                std::uint64_t seed) {
  check_k(k);
  if (groups.size() != labels.size()) throw Error(Errc::InvalidArgument, "one group id per row required");
  std::map<std::string, int> group_label;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, inserted] = group_label.emplace(groups[i], labels[i]);
    if (!inserted && it->second != labels[i]) {
      throw Error(Errc::InvalidArgument, "group '" + groups[i] + "' mixes labels");
    }
  }
  const int n_classes = class_count(labels);
  std::map<std::string, int> fold_of_group;
  std::size_t offset = 0;
  for (int c = 0; c < n_classes; ++c) {
    std::vector<std::string> names;
    for (const auto& [g, l] : group_label) {
      if (l == c) names.push_back(g);
    }
    if (names.empty()) continue;
    if (names.size() < static_cast<std::size_t>(k)) {
      throw Error(Errc::ClassTooSmall, "class " + std::to_string(c) + " has " + std::to_string(names.size()) +
                                           " groups, fewer than " + std::to_string(k) + " folds");
    }
    std::vector<std::size_t> order(names.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(c)}));
    shuffle(order, rng);
    for (std::size_t j = 0; j < order.size(); ++j) {
      fold_of_group[names[order[j]]] = static_cast<int>((offset + j) % static_cast<std::size_t>(k));
    }
    offset += names.size();
  }
  std::vector<int> fold_of(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) fold_of[i] = fold_of_group.at(groups[i]);
  return folds_from_assignment(fold_of, k);
}

FoldMetrics score_predictions(std::span<const int> truth, std::span<const int> predicted, int n_classes) {
  if (truth.size() != predicted.size()) throw Error(Errc::InvalidArgument, "prediction count mismatch");
  if (truth.empty()) throw Error(Errc::EmptyInput, "no predictions to score");
  if (n_classes < 1) throw Error(Errc::InvalidArgument, "n_classes must be >= 1");
  const auto k = static_cast<std::size_t>(n_classes);
  std::vector<std::size_t> tp(k, 0), fp(k, 0), fn(k, 0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i];
    const int p = predicted[i];
    if (t < 0 || t >= n_classes || p < 0 || p >= n_classes) {
      throw Error(Errc::InvalidArgument, "class index out of range");
    }
    if (t == p) {
      ++correct;
      ++tp[static_cast<std::size_t>(t)];
    } else {
      ++fp[static_cast<std::size_t>(p)];
      ++fn[static_cast<std::size_t>(t)];
    }
  }
  double f1_sum = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    const double precision = tp[c] + fp[c] == 0 ? 0.0 : static_cast<double>(tp[c]) / static_cast<double>(tp[c] + fp[c]);
    const double recall = tp[c] + fn[c] == 0 ? 0.0 : static_cast<double>(tp[c]) / static_cast<double>(tp[c] + fn[c]);
    if (precision + recall > 0.0) f1_sum += 2.0 * precision * recall / (precision + recall);
  }
  return {static_cast<double>(correct) / static_cast<double>(truth.size()), f1_sum / static_cast<double>(k)};
}

FoldStats summarize(std::vector<double> accuracies, std::vector<double> f1s) {
  if (accuracies.empty()) throw Error(Errc::EmptyInput, "no fold results");
  FoldStats s;
  const double n = static_cast<double>(accuracies.size());
  // Equal folds give their common value back exactly, so sigma is exactly 0.
  auto mean = [](const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    if (std::adjacent_find(v.begin(), v.end(), std::not_equal_to<>()) == v.end()) return v.front();
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  s.mean_accuracy = mean(accuracies);
  s.mean_f1 = mean(f1s);
  double var = 0.0;
  for (double a : accuracies) var += (a - s.mean_accuracy) * (a - s.mean_accuracy);
  var /= n;
  s.cv_percent = s.mean_accuracy > 0.0 ? std::sqrt(var) / s.mean_accuracy * 100.0 : 0.0;
  s.accuracies = std::move(accuracies);
  s.f1s = std::move(f1s);
  return s;
}

FoldStats evaluate(const ModelFactory& factory, const TrainingSet& data, const std::vector<Fold>& folds,
                   std::uint64_t seed) {
  if (folds.empty()) throw Error(Errc::InvalidArgument, "no folds");
  std::vector<double> acc, f1;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const auto& fold = folds[f];
    if (fold.test.empty() || fold.train.empty()) throw Error(Errc::InvalidArgument, "empty fold");
    std::set<std::size_t> train(fold.train.begin(), fold.train.end());
    for (auto i : fold.test) {
      if (train.count(i)) throw Error(Errc::InvalidArgument, "fold " + std::to_string(f) + " reuses a training row");
    }
    const TrainingSet train_set = data.subset(fold.train);
    const TrainingSet test_set = data.subset(fold.test);
    const Model model = factory(train_set, derive_seed(seed, {static_cast<std::uint64_t>(f)}));
    const auto pred = predict_indices(model, test_set.x);
    const auto m = score_predictions(test_set.y, pred, static_cast<int>(data.classes.size()));
    acc.push_back(m.accuracy);
    f1.push_back(m.macro_f1);
  }
  return summarize(std::move(acc), std::move(f1));
}

FoldStats evaluate(const ModelFactory& factory, const TrainingSet& data, int k, std::uint64_t seed) {
  return evaluate(factory, data, stratified_kfold(data.y, k, seed), seed);
}

ModelFactory make_factory(Algorithm algorithm, const MlConfig& config) {
  switch (algorithm) {
    case Algorithm::DT:
      return [config](const TrainingSet& d, std::uint64_t s) { return train_decision_tree(d, config.tree, s); };
    case Algorithm::RF:
      return [config](const TrainingSet& d, std::uint64_t s) {
        return train_random_forest(d, config.forest, config.forest_tree, s, config.workers);
      };
    case Algorithm::ET:
      return [config](const TrainingSet& d, std::uint64_t s) {
        return train_extra_trees(d, config.forest, config.forest_tree, s, config.workers);
      };
    case Algorithm::BDT:
      return [config](const TrainingSet& d, std::uint64_t s) {
        return train_boosted_trees(d, config.boost, config.boost_tree, s);
      };
  }
  throw Error(Errc::InvalidArgument, "unknown algorithm");
}

AlgorithmRegistry AlgorithmRegistry::with_builtins(const MlConfig& config) {
  AlgorithmRegistry r;
  for (auto a : kAllAlgorithms) r.add(std::string(to_string(a)), make_factory(a, config));
  return r;
}

void AlgorithmRegistry::add(std::string name, ModelFactory factory) {
  if (name.empty() || !factory) throw Error(Errc::InvalidArgument, "registry entry needs a name and a factory");
  factories_[std::move(name)] = std::move(factory);
}

bool AlgorithmRegistry::contains(std::string_view name) const { return factories_.find(name) != factories_.end(); }

const ModelFactory& AlgorithmRegistry::at(std::string_view name) const {
  const auto it = factories_.find(name);
  if (it == factories_.end()) throw Error(Errc::InvalidArgument, "no learner named '" + std::string(name) + "'");
  return it->second;
}

std::vector<std::string> AlgorithmRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [n, f] : factories_) out.push_back(n);
  return out;
}

}  // namespace infopos::ml

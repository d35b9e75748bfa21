#include <algorithm>
#include <cmath>
#include <numeric>

#include "infopos/error.hpp"
#include "infopos/ml.hpp"
#include "infopos/rng.hpp"
#include "parallel.hpp"

namespace infopos::ml {

namespace {

__extension__ typedef unsigned __int128 u128;

// Gini split quality sum_child sum_k n_ck^2 / n_child, kept as the exact
// fraction (A*nR + B*nL) / (nL*nR) so equal splits compare equal.
struct GiniScore {
  u128 num = 0;
  u128 den = 1;

  bool beats(const GiniScore& other) const { return num * other.den > other.num * den; }
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

struct Candidate {
  int feature = -1;
  double threshold = 0.0;
  GiniScore score;
};

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

std::size_t ceil_sqrt(std::size_t n) {
  std::size_t k = 0;
  while (k * k < n) ++k;
  return k;
}

int majority(const std::vector<std::uint64_t>& counts) {
  int best = 0;
  for (std::size_t c = 1; c < counts.size(); ++c) {
    if (counts[c] > counts[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
  }
  return best;
}

class ClassTreeBuilder {
 public:
  ClassTreeBuilder(const TrainingSet& data, const TreeParams& params, bool random_thresholds, Rng* rng)
      : data_(data), params_(params), random_thresholds_(random_thresholds), rng_(rng),
        n_classes_(data.classes.size()) {}

  Tree build(std::vector<std::size_t> rows) {
    grow(std::move(rows), 0);
    return std::move(tree_);
  }

  // Exhaustive search over every feature; used for the root search as well.
  Candidate exhaustive(const std::vector<std::size_t>& rows, const std::vector<int>& features) const {
    Candidate best;
    const auto totals = counts(rows);
    std::vector<std::pair<double, int>> vals(rows.size());
    for (int f : features) {
      for (std::size_t i = 0; i < rows.size(); ++i) {
        vals[i] = {data_.x(rows[i], static_cast<std::size_t>(f)), data_.y[rows[i]]};
      }
      std::sort(vals.begin(), vals.end());
      std::vector<std::uint64_t> left(n_classes_, 0);
      std::vector<std::uint64_t> right = totals;
      u128 sq_left = 0;
      u128 sq_right = 0;
      for (auto c : right) sq_right += static_cast<u128>(c) * c;
      for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
        const auto c = static_cast<std::size_t>(vals[i].second);
        sq_left += 2 * static_cast<u128>(left[c]) + 1;
        sq_right -= 2 * static_cast<u128>(right[c]) - 1;
        ++left[c];
        --right[c];
        const double a = vals[i].first;
        const double b = vals[i + 1].first;
        if (!(a < b)) continue;
        double mid = a + (b - a) / 2.0;
        if (!(mid < b)) mid = a;
        const u128 n_left = i + 1;
        const u128 n_right = vals.size() - (i + 1);
        GiniScore score{sq_left * n_right + sq_right * n_left, n_left * n_right};
        if (best.feature < 0 || score.beats(best.score)) best = {f, mid, score};
      }
    }
    return best;
  }

 private:
  std::vector<std::uint64_t> counts(const std::vector<std::size_t>& rows) const {
    std::vector<std::uint64_t> c(n_classes_, 0);
    for (auto r : rows) ++c[static_cast<std::size_t>(data_.y[r])];
    return c;
  }

  std::vector<int> candidate_features() {
    const std::size_t f = data_.x.cols;
    std::vector<int> all(f);
    std::iota(all.begin(), all.end(), 0);
    if (params_.candidate_features == FeatureSubset::All || rng_ == nullptr) return all;
    const std::size_t k = std::min(f, ceil_sqrt(f));
    for (std::size_t i = 0; i < k; ++i) std::swap(all[i], all[i + rng_->below(f - i)]);
    all.resize(k);
    std::sort(all.begin(), all.end());
    return all;
  }

  Candidate randomized(const std::vector<std::size_t>& rows, const std::vector<int>& features) {
    Candidate best;
    const auto totals = counts(rows);
    for (int f : features) {
      double lo = data_.x(rows.front(), static_cast<std::size_t>(f));
      double hi = lo;
      for (auto r : rows) {
        const double v = data_.x(r, static_cast<std::size_t>(f));
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (!(lo < hi)) continue;
      double threshold = rng_->uniform(lo, hi);
      if (!(threshold < hi)) threshold = lo;
      std::vector<std::uint64_t> left(n_classes_, 0);
      std::uint64_t n_left = 0;
      for (auto r : rows) {
        if (data_.x(r, static_cast<std::size_t>(f)) <= threshold) {
          ++left[static_cast<std::size_t>(data_.y[r])];
          ++n_left;
        }
      }
      u128 sq_left = 0;
      u128 sq_right = 0;
      for (std::size_t c = 0; c < n_classes_; ++c) {
        sq_left += static_cast<u128>(left[c]) * left[c];
        const u128 rc = totals[c] - left[c];
        sq_right += rc * rc;
      }
      const u128 nl = n_left;
      const u128 nr = rows.size() - n_left;
      GiniScore score{sq_left * nr + sq_right * nl, nl * nr};
      if (best.feature < 0 || score.beats(best.score)) best = {f, threshold, score};
    }
    return best;
  }

  int grow(std::vector<std::size_t> rows, int depth) {
    const int index = static_cast<int>(tree_.nodes.size());
    const auto totals = counts(rows);
    Node leaf;
    leaf.label = majority(totals);
    tree_.nodes.push_back(leaf);

    const bool pure = std::count_if(totals.begin(), totals.end(), [](auto c) { return c > 0; }) <= 1;
    if (pure || depth >= params_.max_depth ||
        rows.size() < static_cast<std::size_t>(params_.min_samples_split)) {
      return index;
    }

    const auto features = candidate_features();
    const Candidate best = random_thresholds_ ? randomized(rows, features) : exhaustive(rows, features);
    // An impure node takes its best split even at zero gain (XOR roots).
    if (best.feature < 0) return index;

    std::vector<std::size_t> left, right;
    for (auto r : rows) {
      (data_.x(r, static_cast<std::size_t>(best.feature)) <= best.threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    const int l = grow(std::move(left), depth + 1);
    const int r = grow(std::move(right), depth + 1);
    auto& node = tree_.nodes[static_cast<std::size_t>(index)];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = l;
    node.right = r;
    node.label = -1;
    return index;
  }

  const TrainingSet& data_;
  const TreeParams& params_;
  bool random_thresholds_;
  Rng* rng_;
  std::size_t n_classes_;
  Tree tree_;
};

class RegressionTreeBuilder {
 public:
  RegressionTreeBuilder(const Matrix& x, const std::vector<double>& residual, const TreeParams& params,
                        double leaf_scale)
      : x_(x), residual_(residual), params_(params), leaf_scale_(leaf_scale) {}

  Tree build(std::vector<std::size_t> rows) {
    grow(std::move(rows), 0);
    return std::move(tree_);
  }

 private:
  double leaf_value(const std::vector<std::size_t>& rows) const {
    double num = 0.0;
    double den = 0.0;
    for (auto r : rows) {
      const double g = residual_[r];
      num += g;
      den += std::abs(g) * (1.0 - std::abs(g));
    }
    if (den < 1e-12) return 0.0;
    return leaf_scale_ * num / den;
  }

  int grow(std::vector<std::size_t> rows, int depth) {
    const int index = static_cast<int>(tree_.nodes.size());
    Node leaf;
    leaf.value = leaf_value(rows);
    tree_.nodes.push_back(leaf);
    if (depth >= params_.max_depth || rows.size() < static_cast<std::size_t>(params_.min_samples_split)) {
      return index;
    }

    double total = 0.0;
    double energy = 0.0;
    for (auto r : rows) {
      total += residual_[r];
      energy += residual_[r] * residual_[r];
    }
    const double n = static_cast<double>(rows.size());
    const double parent = total * total / n;

    int best_feature = -1;
    double best_threshold = 0.0;
    double best_gain = 1e-12 * energy;
    std::vector<std::pair<double, double>> vals(rows.size());
    for (std::size_t f = 0; f < x_.cols; ++f) {
      for (std::size_t i = 0; i < rows.size(); ++i) vals[i] = {x_(rows[i], f), residual_[rows[i]]};
      std::sort(vals.begin(), vals.end());
      double sum_left = 0.0;
      for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
        sum_left += vals[i].second;
        const double a = vals[i].first;
        const double b = vals[i + 1].first;
        if (!(a < b)) continue;
        const double nl = static_cast<double>(i + 1);
        const double nr = n - nl;
        const double sum_right = total - sum_left;
        const double gain = sum_left * sum_left / nl + sum_right * sum_right / nr - parent;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          best_threshold = a + (b - a) / 2.0;
          if (!(best_threshold < b)) best_threshold = a;
        }
      }
    }
    if (best_feature < 0) return index;

    std::vector<std::size_t> left, right;
    for (auto r : rows) {
      (x_(r, static_cast<std::size_t>(best_feature)) <= best_threshold ? left : right).push_back(r);
    }
    const int l = grow(std::move(left), depth + 1);
    const int r = grow(std::move(right), depth + 1);
    auto& node = tree_.nodes[static_cast<std::size_t>(index)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = l;
    node.right = r;
    node.value = 0.0;
    return index;
  }

  const Matrix& x_;
  const std::vector<double>& residual_;
  const TreeParams& params_;
  double leaf_scale_;
  Tree tree_;
};

void require_rows(const TrainingSet& data) {
  if (data.size() == 0) throw Error(Errc::DegenerateDataset, "training set has no rows");
  if (data.x.rows != data.y.size()) throw Error(Errc::SchemaMismatch, "feature/label row count mismatch");
  if (data.classes.empty()) throw Error(Errc::DegenerateDataset, "training set has no classes");
}

Model base_model(Algorithm algorithm, const TrainingSet& data, const TreeParams& tree,
                 const EnsembleParams& ensemble, std::uint64_t seed) {
  Model m;
  m.algorithm = algorithm;
  m.classes = data.classes;
  m.n_features = data.x.cols;
  m.tree_params = tree;
  m.ensemble_params = ensemble;
  m.provenance = {data.source_hash, seed};
  return m;
}

Tree grow_member(const TrainingSet& data, const EnsembleParams& ensemble, const TreeParams& tree,
                 std::uint64_t seed, std::size_t index) {
  Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(index)}));
  std::vector<std::size_t> rows;
  if (ensemble.bootstrap) {
    rows.resize(data.size());
    for (auto& r : rows) r = rng.below(data.size());
    std::sort(rows.begin(), rows.end());
  } else {
    rows = all_rows(data.size());
  }
  return ClassTreeBuilder(data, tree, ensemble.random_thresholds, &rng).build(std::move(rows));
}

Model train_forest(Algorithm algorithm, const TrainingSet& data, const EnsembleParams& ensemble,
                   const TreeParams& tree, std::uint64_t seed, int workers, bool parallel) {
  ensemble.validate();
  tree.validate();
  require_rows(data);
  Model m = base_model(algorithm, data, tree, ensemble, seed);
  m.trees.resize(static_cast<std::size_t>(ensemble.n_trees));
  if (parallel) {
    detail::parallel_for(m.trees.size(), workers,
                         [&](std::size_t i) { m.trees[i] = grow_member(data, ensemble, tree, seed, i); });
  } else {
    for (std::size_t i = 0; i < m.trees.size(); ++i) m.trees[i] = grow_member(data, ensemble, tree, seed, i);
  }
  return m;
}

}  // namespace

void TreeParams::validate() const {
  if (max_depth < 1) throw Error(Errc::InvalidArgument, "max_depth must be >= 1");
  if (min_samples_split < 2) throw Error(Errc::InvalidArgument, "min_samples_split must be >= 2");
}

void EnsembleParams::validate() const {
  if (n_trees < 1) throw Error(Errc::InvalidArgument, "n_trees must be >= 1");
  if (n_rounds < 1) throw Error(Errc::InvalidArgument, "n_rounds must be >= 1");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
    throw Error(Errc::InvalidArgument, "learning_rate must lie in (0,1]");
  }
}

const Node& Tree::leaf_for(std::span<const double> row) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return nodes[i];
}

int Tree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<int> d(nodes.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].is_leaf()) continue;
    d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
    d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    deepest = std::max(deepest, d[i] + 1);
  }
  return deepest;
}

Model train_decision_tree(const TrainingSet& data, const TreeParams& params, std::uint64_t seed) {
  params.validate();
  require_rows(data);
  Model m = base_model(Algorithm::DT, data, params, EnsembleParams{}, seed);
  Rng rng(seed);
  m.trees.push_back(ClassTreeBuilder(data, params, false, &rng).build(all_rows(data.size())));
  return m;
}

Model train_random_forest(const TrainingSet& data, const EnsembleParams& ensemble, const TreeParams& tree,
                          std::uint64_t seed, int workers) {
  EnsembleParams e = ensemble;
  e.random_thresholds = false;
  return train_forest(Algorithm::RF, data, e, tree, seed, workers, true);
}

Model train_random_forest_serial(const TrainingSet& data, const EnsembleParams& ensemble,
                                 const TreeParams& tree, std::uint64_t seed) {
  EnsembleParams e = ensemble;
  e.random_thresholds = false;
  return train_forest(Algorithm::RF, data, e, tree, seed, 1, false);
}

Model train_extra_trees(const TrainingSet& data, const EnsembleParams& ensemble, const TreeParams& tree,
                        std::uint64_t seed, int workers) {
  EnsembleParams e = ensemble;
  e.bootstrap = false;
  e.random_thresholds = true;
  return train_forest(Algorithm::ET, data, e, tree, seed, workers, true);
}

Model train_boosted_trees(const TrainingSet& data, const EnsembleParams& ensemble, const TreeParams& tree,
                          std::uint64_t seed) {
  ensemble.validate();
  tree.validate();
  require_rows(data);
  Model m = base_model(Algorithm::BDT, data, tree, ensemble, seed);
  const std::size_t n = data.size();
  const std::size_t k = data.classes.size();
  m.init_scores.assign(k, 0.0);
  if (k < 2) return m;

  const double leaf_scale = static_cast<double>(k - 1) / static_cast<double>(k);
  const double lr = ensemble.learning_rate;
  std::vector<double> score(n * k, 0.0);
  std::vector<double> prob(n * k, 0.0);
  std::vector<double> residual(n);
  for (int round = 0; round < ensemble.n_rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const double* s = &score[i * k];
      const double top = *std::max_element(s, s + k);
      double z = 0.0;
      for (std::size_t c = 0; c < k; ++c) z += std::exp(s[c] - top);
      for (std::size_t c = 0; c < k; ++c) prob[i * k + c] = std::exp(s[c] - top) / z;
    }
    std::vector<Tree> round_trees;
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t i = 0; i < n; ++i) {
        residual[i] = (static_cast<std::size_t>(data.y[i]) == c ? 1.0 : 0.0) - prob[i * k + c];
      }
      round_trees.push_back(RegressionTreeBuilder(data.x, residual, tree, leaf_scale).build(all_rows(n)));
    }
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t i = 0; i < n; ++i) score[i * k + c] += lr * round_trees[c].leaf_for(data.x.row(i)).value;
    }
    for (auto& t : round_trees) m.trees.push_back(std::move(t));
  }
  return m;
}

std::vector<int> predict_indices(const Model& model, const Matrix& rows) {
  if (rows.rows > 0 && rows.cols != model.n_features) {
    throw Error(Errc::SchemaMismatch, "model expects " + std::to_string(model.n_features) + " features, got " +
                                          std::to_string(rows.cols));
  }
  const std::size_t k = model.classes.size();
  std::vector<int> out(rows.rows, 0);
  for (std::size_t i = 0; i < rows.rows; ++i) {
    const auto row = rows.row(i);
    switch (model.algorithm) {
      case Algorithm::DT:
        out[i] = model.trees.front().leaf_for(row).label;
        break;
      case Algorithm::RF:
      case Algorithm::ET: {
        std::vector<std::uint64_t> votes(k, 0);
        for (const auto& t : model.trees) ++votes[static_cast<std::size_t>(t.leaf_for(row).label)];
        out[i] = majority(votes);
        break;
      }
      case Algorithm::BDT: {
        std::vector<double> score = model.init_scores;
        for (std::size_t t = 0; t < model.trees.size(); ++t) {
          score[t % k] += model.ensemble_params.learning_rate * model.trees[t].leaf_for(row).value;
        }
        int best = 0;
        for (std::size_t c = 1; c < k; ++c) {
          if (score[c] > score[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
        }
        out[i] = best;
        break;
      }
    }
  }
  return out;
}

std::vector<std::string> predict(const Model& model, const Matrix& rows) {
  std::vector<std::string> out;
  for (int c : predict_indices(model, rows)) out.push_back(model.classes[static_cast<std::size_t>(c)]);
  return out;
}

SplitChoice best_gini_split(const TrainingSet& data, std::span<const std::size_t> rows) {
  TreeParams params;
  ClassTreeBuilder builder(data, params, false, nullptr);
  std::vector<int> features(data.x.cols);
  std::iota(features.begin(), features.end(), 0);
  const std::vector<std::size_t> r(rows.begin(), rows.end());
  const Candidate best = builder.exhaustive(r, features);
  SplitChoice out;
  if (best.feature < 0) return out;

  std::vector<std::uint64_t> totals(data.classes.size(), 0);
  for (auto i : r) ++totals[static_cast<std::size_t>(data.y[i])];
  u128 parent_sq = 0;
  for (auto c : totals) parent_sq += static_cast<u128>(c) * c;
  const double parent = static_cast<double>(parent_sq);
  const double n = static_cast<double>(r.size());
  out.feature = best.feature;
  out.threshold = best.threshold;
  out.impurity_decrease = std::max(0.0, (best.score.value() - parent / n) / n);
  return out;
}

}  // namespace infopos::ml

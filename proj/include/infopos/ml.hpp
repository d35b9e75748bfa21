#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "infopos/features.hpp"

namespace infopos::ml {

// Row-major feature matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
  bool operator==(const Matrix&) const = default;
};

struct TrainingSet {
  Matrix x;
  std::vector<int> y;                // indices into `classes`
  std::vector<std::string> classes;  // tie-break order
  std::vector<std::string> groups;   // optional per-row group id (scenario)
  std::uint64_t source_hash = 0;

  std::size_t size() const { return y.size(); }
  TrainingSet subset(std::span<const std::size_t> rows) const;
};

// Class order follows `label_order` where given (labels absent from the data
// are dropped), otherwise first appearance.
TrainingSet from_dataset(const Dataset& dataset, const std::vector<std::string>& label_order = {});

enum class Algorithm { BDT, DT, ET, RF };
inline constexpr Algorithm kAllAlgorithms[] = {Algorithm::BDT, Algorithm::DT, Algorithm::ET, Algorithm::RF};
std::string_view to_string(Algorithm a) noexcept;
Algorithm parse_algorithm(std::string_view name);

enum class FeatureSubset { All, Sqrt };

struct TreeParams {
  int max_depth = 8;
  int min_samples_split = 2;
  FeatureSubset candidate_features = FeatureSubset::All;  // split quality is always Gini

  void validate() const;
  bool operator==(const TreeParams&) const = default;
};

struct EnsembleParams {
  int n_trees = 100;
  bool bootstrap = true;
  bool random_thresholds = false;  // Extra-Trees split drawing
  double learning_rate = 0.1;      // boosting only
  int n_rounds = 100;              // boosting only

  void validate() const;
  bool operator==(const EnsembleParams&) const = default;
};

struct Node {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;     // taken when x[feature] <= threshold
  int right = -1;
  int label = -1;    // leaf class (classification trees)
  double value = 0.0;  // leaf output (regression trees)

  bool is_leaf() const { return feature < 0; }
  bool operator==(const Node&) const = default;
};

struct Tree {
  std::vector<Node> nodes;  // nodes[0] is the root

  const Node& leaf_for(std::span<const double> row) const;
  int depth() const;
  bool operator==(const Tree&) const = default;
};

struct Provenance {
  std::uint64_t dataset_hash = 0;
  std::uint64_t seed = 0;
  bool operator==(const Provenance&) const = default;
};

struct Model {
  Algorithm algorithm = Algorithm::DT;
  std::vector<std::string> classes;
  std::size_t n_features = 0;
  std::vector<Tree> trees;  // boosting: round-major, one tree per class per round
  std::vector<double> init_scores;
  TreeParams tree_params;
  EnsembleParams ensemble_params;
  Provenance provenance;

  bool operator==(const Model&) const = default;
};

// CART with Gini impurity. Candidate thresholds are the midpoints between
// consecutive distinct values; the split with the largest impurity decrease
// wins, ties going to the lower feature index and then the lower threshold.
// An impure node splits whenever a candidate exists, even at zero decrease.
// Leaves predict the majority class, ties going to the earlier class.
Model train_decision_tree(const TrainingSet& data, const TreeParams& params, std::uint64_t seed);

// Bagged CART trees (bootstrap resamples of the input size), majority vote.
// The OpenMP and serial variants return identical models.
Model train_random_forest(const TrainingSet& data, const EnsembleParams& ensemble, const TreeParams& tree,
                          std::uint64_t seed, int workers = 0);
Model train_random_forest_serial(const TrainingSet& data, const EnsembleParams& ensemble,
                                 const TreeParams& tree, std::uint64_t seed);

// As the forest, on the full sample, with one uniform threshold drawn in
// [min, max) per candidate feature instead of the exhaustive search.
Model train_extra_trees(const TrainingSet& data, const EnsembleParams& ensemble, const TreeParams& tree,
                        std::uint64_t seed, int workers = 0);

// Gradient boosting on softmax cross-entropy: each round fits one
// squared-error regression tree per class to (onehot - softmax(score)),
// leaf values by the per-leaf Newton step (K-1)/K * sum(r) / sum(|r|(1-|r|)).
Model train_boosted_trees(const TrainingSet& data, const EnsembleParams& ensemble, const TreeParams& tree,
                          std::uint64_t seed);

// Throws SchemaMismatch when the row width differs from training.
std::vector<int> predict_indices(const Model& model, const Matrix& rows);
std::vector<std::string> predict(const Model& model, const Matrix& rows);

// Best exhaustive-search split of the given rows; feature -1 when every
// feature is constant on them. The decrease may be zero.
struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double impurity_decrease = 0.0;
};
SplitChoice best_gini_split(const TrainingSet& data, std::span<const std::size_t> rows);

std::string model_to_json(const Model& model);
Model model_from_json(std::string_view text);
void write_model(const Model& model, const std::filesystem::path& path);
Model read_model(const std::filesystem::path& path);

// ---- evaluation ----

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Row-level stratified folds: per-class counts across folds differ by at
// most one. Throws ClassTooSmall when a class has fewer than k rows.
std::vector<Fold> stratified_kfold(std::span<const int> labels, int k, std::uint64_t seed);

// Whole groups (scenarios) go to one fold, dealt per class.
std::vector<Fold> grouped_kfold(std::span<const int> labels, std::span<const std::string> groups, int k,
                                std::uint64_t seed);

struct FoldMetrics {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
};

// Macro F1 averages per-class F1 over all n_classes; a class with
// precision + recall = 0 contributes 0.
FoldMetrics score_predictions(std::span<const int> truth, std::span<const int> predicted, int n_classes);

struct FoldStats {
  std::vector<double> accuracies;
  std::vector<double> f1s;
  double mean_accuracy = 0.0;
  double mean_f1 = 0.0;
  double cv_percent = 0.0;  // population sigma / mean * 100 of fold accuracies

  bool operator==(const FoldStats&) const = default;
};

FoldStats summarize(std::vector<double> accuracies, std::vector<double> f1s);

using ModelFactory = std::function<Model(const TrainingSet&, std::uint64_t seed)>;

FoldStats evaluate(const ModelFactory& factory, const TrainingSet& data, const std::vector<Fold>& folds,
                   std::uint64_t seed);
FoldStats evaluate(const ModelFactory& factory, const TrainingSet& data, int k, std::uint64_t seed);

struct MlConfig {
  TreeParams tree;                                    // DT
  TreeParams forest_tree{8, 2, FeatureSubset::Sqrt};  // RF and ET members
  EnsembleParams forest;                              // RF and ET
  TreeParams boost_tree{3, 2, FeatureSubset::All};
  EnsembleParams boost;
  int workers = 1;  // threads for forest training
};

ModelFactory make_factory(Algorithm algorithm, const MlConfig& config);

// Name -> factory. Holds the four tree learners; further learners (e.g.
// naive Bayes or SVMs) plug in through add().
class AlgorithmRegistry {
 public:
  static AlgorithmRegistry with_builtins(const MlConfig& config);

  void add(std::string name, ModelFactory factory);
  bool contains(std::string_view name) const;
  const ModelFactory& at(std::string_view name) const;  // throws InvalidArgument
  std::vector<std::string> names() const;

 private:
  std::map<std::string, ModelFactory, std::less<>> factories_;
};

}  // namespace infopos::ml

#include "infopos/error.hpp"
#include "infopos/ml.hpp"
#include "infopos/text.hpp"
#include "json_io.hpp"

namespace infopos::detail {

using nlohmann::json;

namespace {

ml::FeatureSubset parse_subset(const std::string& name) {
  if (name == "all") return ml::FeatureSubset::All;
  if (name == "sqrt") return ml::FeatureSubset::Sqrt;
  throw Error(Errc::InvalidArgument, "candidate_features must be 'all' or 'sqrt', got '" + name + "'");
}

std::string subset_name(ml::FeatureSubset s) { return s == ml::FeatureSubset::All ? "all" : "sqrt"; }

}  // namespace

json tree_params_to_json(const ml::TreeParams& p) {
  return {{"max_depth", p.max_depth},
          {"min_samples_split", p.min_samples_split},
          {"candidate_features", subset_name(p.candidate_features)}};
}

json ensemble_params_to_json(const ml::EnsembleParams& p) {
  return {{"n_trees", p.n_trees},
          {"bootstrap", p.bootstrap},
          {"random_thresholds", p.random_thresholds},
          {"learning_rate", p.learning_rate},
          {"n_rounds", p.n_rounds}};
}

ml::TreeParams tree_params_from_json(const json& j, ml::TreeParams p) {
  p.max_depth = j.value("max_depth", p.max_depth);
  p.min_samples_split = j.value("min_samples_split", p.min_samples_split);
  if (j.contains("candidate_features")) p.candidate_features = parse_subset(j.at("candidate_features"));
  p.validate();
  return p;
}

ml::EnsembleParams ensemble_params_from_json(const json& j, ml::EnsembleParams p) {
  p.n_trees = j.value("n_trees", p.n_trees);
  p.bootstrap = j.value("bootstrap", p.bootstrap);
  p.random_thresholds = j.value("random_thresholds", p.random_thresholds);
  p.learning_rate = j.value("learning_rate", p.learning_rate);
  p.n_rounds = j.value("n_rounds", p.n_rounds);
  p.validate();
  return p;
}

}  // namespace infopos::detail

namespace infopos::ml {

using nlohmann::json;

std::string model_to_json(const Model& model) {
  json trees = json::array();
  for (const auto& t : model.trees) {
    json nodes = json::array();
    for (const auto& n : t.nodes) {
      if (n.is_leaf()) {
        nodes.push_back({{"label", n.label}, {"value", n.value}});
      } else {
        nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right}});
      }
    }
    trees.push_back(std::move(nodes));
  }
  json j{{"format", "infopos-model"},
         {"version", 1},
         {"algorithm", to_string(model.algorithm)},
         {"classes", model.classes},
         {"n_features", model.n_features},
         {"init_scores", model.init_scores},
         {"tree_params", detail::tree_params_to_json(model.tree_params)},
         {"ensemble_params", detail::ensemble_params_to_json(model.ensemble_params)},
         {"provenance", {{"dataset_hash", model.provenance.dataset_hash}, {"seed", model.provenance.seed}}},
         {"trees", std::move(trees)}};
  return j.dump() + "\n";
}

Model model_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    if (j.value("format", "") != "infopos-model") throw Error(Errc::SchemaMismatch, "not an infopos model file");
    if (j.value("version", 0) != 1) throw Error(Errc::SchemaMismatch, "unsupported model version");
    Model m;
    m.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
    m.classes = j.at("classes").get<std::vector<std::string>>();
    m.n_features = j.at("n_features").get<std::size_t>();
    m.init_scores = j.at("init_scores").get<std::vector<double>>();
    m.tree_params = detail::tree_params_from_json(j.at("tree_params"), {});
    m.ensemble_params = detail::ensemble_params_from_json(j.at("ensemble_params"), {});
    m.provenance.dataset_hash = j.at("provenance").at("dataset_hash").get<std::uint64_t>();
    m.provenance.seed = j.at("provenance").at("seed").get<std::uint64_t>();
    for (const auto& nodes : j.at("trees")) {
      Tree t;
      for (const auto& n : nodes) {
        Node node;
        if (n.contains("feature")) {
          node.feature = n.at("feature").get<int>();
          node.threshold = n.at("threshold").get<double>();
          node.left = n.at("left").get<int>();
          node.right = n.at("right").get<int>();
        } else {
          node.label = n.at("label").get<int>();
          node.value = n.at("value").get<double>();
        }
        t.nodes.push_back(node);
      }
      const auto count = static_cast<int>(t.nodes.size());
      for (const auto& node : t.nodes) {
        if (!node.is_leaf() && (node.left <= 0 || node.left >= count || node.right <= 0 || node.right >= count ||
                                node.feature >= static_cast<int>(m.n_features))) {
          throw Error(Errc::SchemaMismatch, "model tree has an out-of-range node reference");
        }
      }
      if (t.nodes.empty()) throw Error(Errc::SchemaMismatch, "model tree has no nodes");
      m.trees.push_back(std::move(t));
    }
    return m;
  } catch (const json::exception& e) {
    throw ParseError(0, std::string("model: ") + e.what());
  }
}

void write_model(const Model& model, const std::filesystem::path& path) {
  text::write_file(path, model_to_json(model));
}

Model read_model(const std::filesystem::path& path) { return model_from_json(text::read_file(path)); }

}  // namespace infopos::ml

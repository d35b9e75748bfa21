#pragma once

// nlohmann/json conversions shared between library translation units.

#include <json.hpp>

#include "infopos/degrade.hpp"
#include "infopos/ml.hpp"
#include "infopos/synth.hpp"

namespace infopos::detail {

CorpusSpec corpus_spec_from_json(const nlohmann::json& j);
nlohmann::json corpus_spec_to_json(const CorpusSpec& spec);

DegradationPlan plan_from_json(const nlohmann::json& j);
nlohmann::json plan_to_json(const DegradationPlan& plan);

ml::TreeParams tree_params_from_json(const nlohmann::json& j, ml::TreeParams defaults);
ml::EnsembleParams ensemble_params_from_json(const nlohmann::json& j, ml::EnsembleParams defaults);
nlohmann::json tree_params_to_json(const ml::TreeParams& p);
nlohmann::json ensemble_params_to_json(const ml::EnsembleParams& p);

}  // namespace infopos::detail

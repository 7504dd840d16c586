#pragma once

#include <json.hpp>

#include "qtag/boosting.hpp"
#include "qtag/dataset.hpp"
#include "qtag/embedding.hpp"
#include "qtag/svm.hpp"

namespace qtag {

nlohmann::json spec_to_json(const EmbeddingSpec& spec);
EmbeddingSpec spec_from_json(const nlohmann::json& j);

nlohmann::json svm_to_json(const SvmModel& m);
SvmModel svm_from_json(const nlohmann::json& j);

nlohmann::json scaler_to_json(const ScalerParams& s);
ScalerParams scaler_from_json(const nlohmann::json& j);

nlohmann::json pca_to_json(const PcaTransform& t);
PcaTransform pca_from_json(const nlohmann::json& j);

}  // namespace qtag

#pragma once

#include <json.hpp>

#include "pcgkit/classifiers.hpp"

namespace pcgkit {

// Internal JSON bridge shared by model and strategy serialization.
nlohmann::json model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const nlohmann::json& doc);

} // namespace pcgkit

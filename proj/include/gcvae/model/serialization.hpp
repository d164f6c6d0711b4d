#pragma once

// Model JSON: {"format_version": 1, "config": {...}, "weights": [{"name", "shape", "values"}, ...]}.
// Values are written with shortest round-trip formatting, so load(save(p)) == p bit for bit.

#include <json.hpp>

#include "gcvae/model/gcvae.hpp"
#include "gcvae/model/training.hpp"

namespace gcvae {

inline constexpr int kModelFormatVersion = 1;

nlohmann::json to_json(const ModelConfig& config);
/// Missing fields keep their defaults; throws std::invalid_argument on bad values.
ModelConfig model_config_from_json(const nlohmann::json& j, ModelConfig defaults = {});

nlohmann::json to_json(const GcvaeParams& params);
/// Throws std::invalid_argument on a format-version mismatch, ShapeError on
/// tensors that disagree with the stored config.
GcvaeParams params_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TrainedModel& model);
TrainedModel trained_model_from_json(const nlohmann::json& j);

}  // namespace gcvae

#include "gcvae/model/serialization.hpp"

#include <cmath>

namespace gcvae {

using nlohmann::json;

json to_json(const ModelConfig& c) {
  return {{"n_max", c.n_max},
          {"d", c.d},
          {"latent_dim", c.latent_dim},
          {"encoder_hidden", c.encoder_hidden},
          {"encoder_layers", c.encoder_layers},
          {"prior_hidden", c.prior_hidden},
          {"decoder_hidden", c.decoder_hidden},
          {"feature_variance", c.feature_variance},
          {"model_features", c.model_features}};
}

ModelConfig model_config_from_json(const json& j, ModelConfig c) {
  if (!j.is_object()) throw std::invalid_argument("model config must be a JSON object");
  auto count = [&j](const char* key, std::size_t& out) {
    if (!j.contains(key)) return;
    const json& v = j.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
      throw std::invalid_argument(std::string("model.") + key + " must be a non-negative integer");
    }
    out = v.get<std::size_t>();
  };
  count("n_max", c.n_max);
  count("d", c.d);
  count("latent_dim", c.latent_dim);
  count("encoder_hidden", c.encoder_hidden);
  count("encoder_layers", c.encoder_layers);
  count("prior_hidden", c.prior_hidden);
  count("decoder_hidden", c.decoder_hidden);
  if (j.contains("feature_variance")) {
    if (!j.at("feature_variance").is_number()) throw std::invalid_argument("model.feature_variance must be a number");
    c.feature_variance = j.at("feature_variance").get<double>();
    if (!(c.feature_variance > 0.0) || !std::isfinite(c.feature_variance)) {
      throw std::invalid_argument("model.feature_variance must be positive");
    }
  }
  if (j.contains("model_features")) {
    if (!j.at("model_features").is_boolean()) throw std::invalid_argument("model.model_features must be a boolean");
    c.model_features = j.at("model_features").get<bool>();
  }
  return c;
}

json to_json(const GcvaeParams& params) {
  json weights = json::array();
  const ad::ParamSet& ps = params.weights();
  for (std::size_t i = 0; i < ps.size(); ++i) {
    weights.push_back({{"name", ps.name(i)}, {"shape", ps[i].shape()},
                       {"values", std::vector<double>(ps[i].values().begin(), ps[i].values().end())}});
  }
  return {{"format_version", kModelFormatVersion}, {"config", to_json(params.config())}, {"weights", weights}};
}

GcvaeParams params_from_json(const json& j) {
  if (!j.is_object() || !j.contains("format_version") || !j.at("format_version").is_number_integer()) {
    throw std::invalid_argument("model document lacks an integer format_version");
  }
  if (j.at("format_version").get<int>() != kModelFormatVersion) {
    throw std::invalid_argument("unsupported model format_version " + j.at("format_version").dump());
  }
  if (!j.contains("config") || !j.contains("weights") || !j.at("weights").is_array()) {
    throw std::invalid_argument("model document needs \"config\" and \"weights\"");
  }
  const ModelConfig config = model_config_from_json(j.at("config"));
  ad::ParamSet weights;
  for (const json& w : j.at("weights")) {
    try {
      weights.add(w.at("name").get<std::string>(),
                  Tensor(w.at("shape").get<std::vector<std::size_t>>(), w.at("values").get<std::vector<double>>()));
    } catch (const json::exception& e) {
      throw std::invalid_argument(std::string("bad weight entry: ") + e.what());
    }
  }
  return GcvaeParams(config, std::move(weights));
}

json to_json(const TrainedModel& model) {
  if (const auto* single = std::get_if<GcvaeParams>(&model)) {
    return {{"kind", "single"}, {"params", to_json(*single)}};
  }
  const auto& towers = std::get<TwoTowerModel>(model);
  return {{"kind", "two-tower"}, {"model_pos", to_json(towers.model_pos)}, {"model_neg", to_json(towers.model_neg)}};
}

TrainedModel trained_model_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind")) throw std::invalid_argument("model entry lacks \"kind\"");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "single") return params_from_json(j.at("params"));
  if (kind == "two-tower") {
    TwoTowerModel towers{params_from_json(j.at("model_pos")), params_from_json(j.at("model_neg"))};
    if (!(towers.model_pos.config() == towers.model_neg.config())) {
      throw std::invalid_argument("two-tower model has towers with different configurations");
    }
    return towers;
  }
  throw std::invalid_argument("unknown model kind \"" + kind + "\"");
}

}  // namespace gcvae

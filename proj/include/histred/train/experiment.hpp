#ifndef HISTRED_TRAIN_EXPERIMENT_HPP
#define HISTRED_TRAIN_EXPERIMENT_HPP

#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "histred/model/re_model.hpp"
#include "histred/train/trainer.hpp"
#include "histred/version.hpp"

namespace histred::train {

/// One experiment: model + training settings, data locations and the sequence level of the data.
struct ExperimentConfig {
  model::ModelConfig model;
  TrainConfig train;
  std::string train_path;
  std::string valid_path;
  std::string test_path;
  std::optional<std::size_t> sl;
};

inline nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j{{"model", model::to_json(c.model)},
                   {"train", to_json(c.train)},
                   {"data", {{"train", c.train_path}, {"valid", c.valid_path}, {"test", c.test_path}}}};
  j["sl"] = c.sl ? nlohmann::json(*c.sl) : nlohmann::json();
  return j;
}

inline ExperimentConfig experiment_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  if (j.contains("model")) c.model = model::model_config_from_json(j.at("model"));
  if (j.contains("train")) c.train = train_config_from_json(j.at("train"));
  if (j.contains("data")) {
    const auto& d = j.at("data");
    c.train_path = d.value("train", std::string());
    c.valid_path = d.value("valid", std::string());
    c.test_path = d.value("test", std::string());
  }
  if (j.contains("sl") && !j.at("sl").is_null()) c.sl = j.at("sl").get<std::size_t>();
  return c;
}

inline ExperimentConfig load_experiment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open experiment config: " + path);
  return experiment_from_json(nlohmann::json::parse(in));
}

inline std::string experiment_hash(const ExperimentConfig& c) { return config_hash(to_json(c)); }

}  // namespace histred::train

#endif  // HISTRED_TRAIN_EXPERIMENT_HPP

#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "physio/ad/param_store.hpp"

namespace physio::io {

inline constexpr const char* kParamsVersion = "physio-kalman-params-v1";

// {"path": {"shape": [...], "data": [...]}}; float64 round-trips exactly
nlohmann::json params_to_json(const ad::ParamStore& ps);
// overwrites values of an identically-shaped store; path or shape drift is
// an error in either direction
void params_from_json(ad::ParamStore& ps, const nlohmann::json& j);

// z-score constants estimated on the training split and frozen with the model
struct Normalization {
  std::vector<std::string> feature_names;
  std::vector<double> feature_mean;
  std::vector<double> feature_std;
  double target_mean = 0.0;
  double target_std = 1.0;
};

nlohmann::json normalization_to_json(const Normalization& n);
Normalization normalization_from_json(const nlohmann::json& j);

struct Checkpoint {
  std::string model;      // "hr_ode" | "hr_kalman" | "vo2_kalman"
  nlohmann::json config;  // enough to rebuild the network shapes
  Normalization norm;
  nlohmann::json params;
};

void save_checkpoint(const std::string& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::string& path);

void write_json_file(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::string& path);

}  // namespace physio::io

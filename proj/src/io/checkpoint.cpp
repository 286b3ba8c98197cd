#include "physio/io/checkpoint.hpp"

#include <fstream>

#include "physio/errors.hpp"

namespace physio::io {

nlohmann::json params_to_json(const ad::ParamStore& ps) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [path, t] : ps.items()) {
    j[path] = {{"shape", t.shape()}, {"data", t.values()}};
  }
  return j;
}

void params_from_json(ad::ParamStore& ps, const nlohmann::json& j) {
  if (!j.is_object()) throw DataError("params: expected a JSON object");
  for (const auto& [path, t] : ps.items()) {
    if (!j.contains(path)) throw DataError("params: missing entry " + path);
    const auto& e = j.at(path);
    const auto shape = e.at("shape").get<ad::Shape>();
    if (shape != t.shape())
      throw DataError("params: " + path + " has shape " + ad::shape_str(shape) +
                      ", expected " + ad::shape_str(t.shape()));
    ps.set_values(path, e.at("data").get<std::vector<double>>());
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!ps.has(it.key()))
      throw DataError("params: unexpected entry " + it.key());
  }
}

nlohmann::json normalization_to_json(const Normalization& n) {
  return {{"features",
           {{"names", n.feature_names},
            {"mean", n.feature_mean},
            {"std", n.feature_std}}},
          {"target", {{"mean", n.target_mean}, {"std", n.target_std}}}};
}

Normalization normalization_from_json(const nlohmann::json& j) {
  Normalization n;
  const auto& f = j.at("features");
  n.feature_names = f.at("names").get<std::vector<std::string>>();
  n.feature_mean = f.at("mean").get<std::vector<double>>();
  n.feature_std = f.at("std").get<std::vector<double>>();
  if (n.feature_mean.size() != n.feature_names.size() ||
      n.feature_std.size() != n.feature_names.size())
    throw DataError("checkpoint: feature names/mean/std lengths disagree");
  n.target_mean = j.at("target").at("mean").get<double>();
  n.target_std = j.at("target").at("std").get<double>();
  return n;
}

void save_checkpoint(const std::string& path, const Checkpoint& c) {
  nlohmann::json j = normalization_to_json(c.norm);
  j["version"] = kParamsVersion;
  j["model"] = c.model;
  j["config"] = c.config;
  j["params"] = c.params;
  write_json_file(path, j);
}

Checkpoint load_checkpoint(const std::string& path) {
  const nlohmann::json j = read_json_file(path);
  const auto version = j.at("version").get<std::string>();
  if (version != kParamsVersion)
    throw DataError("checkpoint " + path + ": version " + version +
                    ", expected " + kParamsVersion);
  Checkpoint c;
  c.model = j.at("model").get<std::string>();
  c.config = j.at("config");
  c.norm = normalization_from_json(j);
  c.params = j.at("params");
  return c;
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << j.dump(2) << '\n';
  if (!out) throw DataError("write failed: " + path);
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  return j;
}

}  // namespace physio::io

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace physio::cli {

// Shared by every subcommand. `out` is a directory; each run writes
// resolved_config.json next to its outputs so reruns are auditable.
struct CommonOpts {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out = "out";
  int jobs = 1;
};

struct SynthOpts : CommonOpts {
  int runners = 10;
  int sessions_per_runner = 8;
  std::int64_t min_duration_s = 600;
  std::int64_t max_duration_s = 1800;
  bool no_noise = false;
};

struct PreprocessOpts : CommonOpts {
  std::string data;
  std::string mode = "vo2";  // hr | vo2
};

struct TrainOpts : CommonOpts {
  std::string data;
  std::string model = "vo2";  // hr_ode | hr_kalman | vo2
  std::string preset;         // hr: small | large, vo2: 128-4 | 256-2
  int enc_hidden = 0;         // sizing overrides; 0 keeps the preset value
  int hidden = 0;
  int layers = 0;
  int head_hidden = 0;
  int epochs = 0;
  int batch = 0;
  std::int64_t window = 0;
  std::int64_t stride = 0;
  double lr = 0.0;
  int k_holdout = 1;
  int max_splits = 0;  // 0 trains every split
  double val_fraction = 0.15;
};

struct EvalOpts : CommonOpts {
  std::string data;
  std::string checkpoints;         // a train output directory
  std::string hr_source = "true";  // true | ode_pred | kalman_pred
  std::string hr_checkpoints;      // HR train output, required for *_pred
};

struct PredictOpts : CommonOpts {
  std::string checkpoint;  // path to one checkpoint.json
  std::string session;     // raw session csv
  std::string mode = "standard";  // standard | generative (HR models)
};

int cmd_synth(const SynthOpts& o);
int cmd_preprocess(const PreprocessOpts& o);
int cmd_train(const TrainOpts& o);
int cmd_eval(const EvalOpts& o);
int cmd_predict(const PredictOpts& o);

// Session CSVs in a dataset directory, breath sidecars excluded, sorted.
std::vector<std::string> list_session_files(const std::string& dir);

nlohmann::json resolved_json(const char* command, const SynthOpts& o);
nlohmann::json resolved_json(const char* command, const PreprocessOpts& o);
nlohmann::json resolved_json(const char* command, const TrainOpts& o);
nlohmann::json resolved_json(const char* command, const EvalOpts& o);
nlohmann::json resolved_json(const char* command, const PredictOpts& o);

// Parses argv, merges an optional JSON config file (flags win), dispatches.
// Returns the process exit code; library errors are mapped by the caller.
int run(int argc, const char* const* argv);

}  // namespace physio::cli

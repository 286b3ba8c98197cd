#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace physio::ingest {

// Missing cells are stored as NaN until transform_features folds them into
// the mask.
struct RawSession {
  std::string session_id;
  std::string runner_id;
  std::vector<std::int64_t> t;
  std::map<std::string, std::vector<double>> channels;
  std::vector<std::pair<double, double>> breath;  // (t_s, vo2_mlmin)
  double age_years = 0.0;
  int sex_code = 0;  // {0,1}
  double height_m = 0.0;
  double weight_kg = 0.0;
};

enum class FeatureMode { hr, vo2 };

struct FeatureSession {
  std::vector<double> x;  // row-major [T x D]
  std::int64_t T = 0;
  std::int64_t D = 0;
  std::vector<double> hr;    // empty when the column is absent
  std::vector<double> vo2;   // empty when no vo2 source exists
  std::vector<double> mask;  // {0,1} per second
  std::vector<std::string> feature_names;
  std::string runner_id;
  std::string session_id;
};

struct Window {
  std::int64_t start = 0;
  std::int64_t length = 0;
};

// Expects `path` plus a sidecar `<stem>.json`; a `<stem>_breath.csv` is
// picked up when present.
RawSession load_session(const std::string& path);

FeatureSession transform_features(const RawSession& raw, FeatureMode mode);

std::vector<double> savgol_smooth(const std::vector<double>& series,
                                  int window = 15, int order = 3);

struct HoldResult {
  std::vector<double> values;
  std::int64_t first_valid = 0;  // indices before this are masked
};
HoldResult zero_order_hold(const std::vector<std::pair<double, double>>& samples,
                           std::int64_t grid_len);

std::vector<Window> segment_windows(std::int64_t T, std::int64_t length = 60,
                                    std::int64_t stride = 60);

}  // namespace physio::ingest

#include <cmath>
#include <vector>

#include "physio/errors.hpp"
#include "physio/ingest/ingest.hpp"

namespace physio::ingest {

namespace {

const std::vector<std::string> kHrFeatures = {
    "pace_sec_per_km", "cadence_spm",    "vertical_oscillation_norm",
    "stance_time_frac", "step_length_m", "altitude_m",
    "altitude_gain_m",  "vertical_ratio"};

const std::vector<std::string> kVo2Extra = {
    "hr_bpm", "window_index_frac", "elapsed_frac", "age_z",
    "sex",    "height_z",          "weight_z"};

const std::vector<double>& channel(const RawSession& raw,
                                   const std::string& name) {
  auto it = raw.channels.find(name);
  if (it == raw.channels.end())
    throw DataError("transform_features: missing channel " + name);
  if (static_cast<std::int64_t>(it->second.size()) !=
      static_cast<std::int64_t>(raw.t.size()))
    throw DataError("transform_features: channel " + name + " length");
  return it->second;
}

bool ok(double v) { return !std::isnan(v); }

}  // namespace

FeatureSession transform_features(const RawSession& raw, FeatureMode mode) {
  const auto T = static_cast<std::int64_t>(raw.t.size());
  const auto& pace = channel(raw, "pace_mps");
  const auto& cad = channel(raw, "cadence_spm");
  const auto& vosc = channel(raw, "vertical_oscillation_mm");
  const auto& alt = channel(raw, "altitude_m");
  const auto& stance = channel(raw, "stance_time_pct");
  const auto& vratio = channel(raw, "vertical_ratio");
  const auto& step = channel(raw, "step_length_mm");
  const auto& hr = channel(raw, "hr_bpm");

  FeatureSession fs;
  fs.T = T;
  fs.runner_id = raw.runner_id;
  fs.session_id = raw.session_id;
  fs.feature_names = kHrFeatures;
  if (mode == FeatureMode::vo2)
    fs.feature_names.insert(fs.feature_names.end(), kVo2Extra.begin(),
                            kVo2Extra.end());
  fs.D = static_cast<std::int64_t>(fs.feature_names.size());
  fs.x.assign(static_cast<size_t>(T * fs.D), 0.0);
  fs.mask.assign(static_cast<size_t>(T), 1.0);
  fs.hr.assign(static_cast<size_t>(T), 0.0);

  // vo2 target: a 1 Hz column wins over breath samples; either way the
  // series is held onto the grid and Savitzky-Golay smoothed
  std::vector<double> vo2_raw;
  std::int64_t vo2_from = 0;
  std::vector<char> vo2_cell_ok;
  auto vo2_col = raw.channels.find("vo2_mlmin");
  if (vo2_col != raw.channels.end()) {
    vo2_cell_ok.assign(static_cast<size_t>(T), 0);
    std::vector<std::pair<double, double>> pairs;
    for (std::int64_t i = 0; i < T; ++i) {
      const double v = vo2_col->second[static_cast<size_t>(i)];
      if (ok(v)) {
        pairs.emplace_back(static_cast<double>(i), v);
        vo2_cell_ok[static_cast<size_t>(i)] = 1;
      }
    }
    if (pairs.empty()) throw DataError("vo2 column has no values");
    auto held = zero_order_hold(pairs, T);
    vo2_raw = std::move(held.values);
    vo2_from = held.first_valid;
  } else if (!raw.breath.empty()) {
    auto held = zero_order_hold(raw.breath, T);
    vo2_raw = std::move(held.values);
    vo2_from = held.first_valid;
  } else if (mode == FeatureMode::vo2) {
    throw DataError("session " + raw.session_id + " has no vo2 source");
  }
  const bool smoothable = !vo2_raw.empty() && T - vo2_from >= 15;
  if (!smoothable && mode == FeatureMode::vo2)
    throw DataError("session " + raw.session_id +
                    ": vo2 series too short to smooth");
  if (smoothable) {
    std::vector<double> suffix(vo2_raw.begin() + vo2_from, vo2_raw.end());
    suffix = savgol_smooth(suffix);
    fs.vo2.assign(static_cast<size_t>(T), 0.0);
    for (std::int64_t i = vo2_from; i < T; ++i)
      fs.vo2[static_cast<size_t>(i)] = suffix[static_cast<size_t>(i - vo2_from)];
  }

  const double total_windows = std::ceil(static_cast<double>(T) / 60.0);
  for (std::int64_t i = 0; i < T; ++i) {
    const auto u = static_cast<size_t>(i);
    double* row = fs.x.data() + i * fs.D;
    bool good = ok(pace[u]) && ok(cad[u]) && ok(vosc[u]) && ok(alt[u]) &&
                ok(stance[u]) && ok(vratio[u]) && ok(step[u]) && ok(hr[u]);
    if (good && pace[u] <= 0.0) good = false;  // standing still, not an error
    if (good) {
      row[0] = 1000.0 / pace[u];
      row[1] = cad[u] * 2.0;
      row[2] = vosc[u] / 1000.0 / raw.height_m;
      row[3] = stance[u] / 100.0;
      row[4] = step[u] / 1000.0;
      row[5] = alt[u];
      row[6] = (i > 0 && ok(alt[u - 1])) ? alt[u] - alt[u - 1] : 0.0;
      row[7] = vratio[u];
    }
    if (ok(hr[u])) fs.hr[u] = hr[u];
    if (mode == FeatureMode::vo2) {
      row[8] = ok(hr[u]) ? hr[u] : 0.0;
      row[9] = std::floor(static_cast<double>(i) / 60.0) / total_windows;
      row[10] = static_cast<double>(i) / 7200.0;
      row[11] = (raw.age_years - 35.0) / 10.0;
      row[12] = static_cast<double>(raw.sex_code);
      row[13] = (raw.height_m - 1.75) / 0.1;
      row[14] = (raw.weight_kg - 70.0) / 10.0;
      if (i < vo2_from) good = false;
      if (!vo2_cell_ok.empty() && !vo2_cell_ok[u]) good = false;
    }
    if (!good) fs.mask[u] = 0.0;
  }
  return fs;
}

}  // namespace physio::ingest

#pragma once

#include <cstdint>
#include <vector>

#include "json.hpp"

namespace physio::train {

struct MetricRow {
  std::int64_t n = 0;
  std::int64_t n_mape = 0;  // samples surviving the MAPE floor
  double mae = 0.0;
  double rmse = 0.0;
  double mape_pct = 0.0;
  double pearson_r = 0.0;  // 0 when either side is constant
  double r2 = 0.0;         // 1 - SSE/SST; 1 when both are 0
  double mean_diff = 0.0;  // pred - true, population SD below
  double sd_diff = 0.0;
};

// Zones are per-session tertiles of the true signal (nearest-rank cuts); a
// sample is a transition when the true value moves by more than 5 units over
// the next 5 samples, steady otherwise (trailing samples with no such
// lookahead are steady). MAPE drops samples with |true| under 1% of the
// session's mean true value.
struct Metrics {
  MetricRow overall;
  MetricRow zone_low, zone_medium, zone_high;
  MetricRow transition, steady;
};

Metrics evaluate(const std::vector<std::vector<double>>& pred_sessions,
                 const std::vector<std::vector<double>>& true_sessions);

nlohmann::json metric_row_to_json(const MetricRow& r);
nlohmann::json metrics_to_json(const Metrics& m);

}  // namespace physio::train

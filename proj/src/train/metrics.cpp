#include "physio/train/metrics.hpp"

#include <cmath>
#include <string>

#include "physio/errors.hpp"
#include "physio/train/losses.hpp"

namespace physio::train {

namespace {

constexpr double kStabilityThreshold = 5.0;
constexpr int kStabilityHorizon = 5;

struct Sample {
  double p = 0.0, y = 0.0;
  bool mape_ok = false;
  int zone = 0;  // 0 low, 1 medium, 2 high
  bool transition = false;
};

template <typename Keep>
MetricRow reduce(const std::vector<Sample>& samples, Keep keep) {
  MetricRow r;
  double sum_abs = 0, sum_sq = 0, sum_d = 0, sum_p = 0, sum_y = 0, sum_pct = 0;
  for (const auto& s : samples) {
    if (!keep(s)) continue;
    const double d = s.p - s.y;
    r.n += 1;
    sum_abs += std::abs(d);
    sum_sq += d * d;
    sum_d += d;
    sum_p += s.p;
    sum_y += s.y;
    if (s.mape_ok) {
      r.n_mape += 1;
      sum_pct += std::abs(d / s.y);
    }
  }
  if (r.n == 0) return r;
  const double n = static_cast<double>(r.n);
  r.mae = sum_abs / n;
  r.rmse = std::sqrt(sum_sq / n);
  r.mape_pct = r.n_mape > 0 ? 100.0 * sum_pct / r.n_mape : 0.0;
  r.mean_diff = sum_d / n;

  const double p_bar = sum_p / n, y_bar = sum_y / n;
  double cov = 0, var_p = 0, var_y = 0, var_d = 0;
  for (const auto& s : samples) {
    if (!keep(s)) continue;
    const double dp = s.p - p_bar, dy = s.y - y_bar;
    cov += dp * dy;
    var_p += dp * dp;
    var_y += dy * dy;
    const double dd = (s.p - s.y) - r.mean_diff;
    var_d += dd * dd;
  }
  r.sd_diff = std::sqrt(var_d / n);
  r.pearson_r =
      (var_p > 0 && var_y > 0) ? cov / std::sqrt(var_p * var_y) : 0.0;
  if (var_y > 0)
    r.r2 = 1.0 - sum_sq / var_y;
  else
    r.r2 = sum_sq == 0.0 ? 1.0 : 0.0;

  if (r.rmse + 1e-9 < r.mae)
    throw ContractError("metrics: rmse fell below mae");
  return r;
}

}  // namespace

Metrics evaluate(const std::vector<std::vector<double>>& pred_sessions,
                 const std::vector<std::vector<double>>& true_sessions) {
  if (pred_sessions.size() != true_sessions.size())
    throw DataError("evaluate: session count mismatch");

  std::vector<Sample> samples;
  for (std::size_t s = 0; s < pred_sessions.size(); ++s) {
    const auto& pred = pred_sessions[s];
    const auto& truth = true_sessions[s];
    if (pred.size() != truth.size())
      throw DataError("evaluate: session " + std::to_string(s) +
                      " prediction length " + std::to_string(pred.size()) +
                      " vs true length " + std::to_string(truth.size()));
    if (truth.empty()) continue;
    const auto t_len = static_cast<std::int64_t>(truth.size());

    double mean_true = 0.0;
    for (double v : truth) mean_true += v;
    mean_true /= static_cast<double>(t_len);
    const double mape_floor = 0.01 * mean_true;

    const double c1 = percentile_nearest_rank(truth, 1.0 / 3.0);
    const double c2 = percentile_nearest_rank(truth, 2.0 / 3.0);

    for (std::int64_t t = 0; t < t_len; ++t) {
      Sample smp;
      smp.p = pred[t];
      smp.y = truth[t];
      smp.mape_ok = std::abs(truth[t]) >= mape_floor;
      smp.zone = truth[t] <= c1 ? 0 : (truth[t] <= c2 ? 1 : 2);
      smp.transition = t + kStabilityHorizon < t_len &&
                       std::abs(truth[t + kStabilityHorizon] - truth[t]) >
                           kStabilityThreshold;
      samples.push_back(smp);
    }
  }

  Metrics m;
  m.overall = reduce(samples, [](const Sample&) { return true; });
  m.zone_low = reduce(samples, [](const Sample& s) { return s.zone == 0; });
  m.zone_medium = reduce(samples, [](const Sample& s) { return s.zone == 1; });
  m.zone_high = reduce(samples, [](const Sample& s) { return s.zone == 2; });
  m.transition = reduce(samples, [](const Sample& s) { return s.transition; });
  m.steady = reduce(samples, [](const Sample& s) { return !s.transition; });
  return m;
}

nlohmann::json metric_row_to_json(const MetricRow& r) {
  return {{"n", r.n},          {"n_mape", r.n_mape},
          {"mae", r.mae},      {"rmse", r.rmse},
          {"mape_pct", r.mape_pct}, {"pearson_r", r.pearson_r},
          {"r2", r.r2},        {"mean_diff", r.mean_diff},
          {"sd_diff", r.sd_diff}};
}

nlohmann::json metrics_to_json(const Metrics& m) {
  return {{"overall", metric_row_to_json(m.overall)},
          {"zones",
           {{"low", metric_row_to_json(m.zone_low)},
            {"medium", metric_row_to_json(m.zone_medium)},
            {"high", metric_row_to_json(m.zone_high)}}},
          {"stability",
           {{"transition", metric_row_to_json(m.transition)},
            {"steady", metric_row_to_json(m.steady)}}}};
}

}  // namespace physio::train

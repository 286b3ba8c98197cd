#include <cmath>
#include <vector>

#include "physio/errors.hpp"
#include "physio/ingest/ingest.hpp"

namespace physio::ingest {

namespace {

// Least-squares polynomial fit over (offsets, ys), evaluated at offset 0.
// Normal equations are well conditioned here: |offset| ≤ 14, order ≤ 3.
double polyfit_at_zero(const std::vector<double>& offsets,
                       const std::vector<double>& ys, int order) {
  const int m = order + 1;
  std::vector<double> a(static_cast<size_t>(m) * m, 0.0);
  std::vector<double> rhs(m, 0.0);
  for (size_t i = 0; i < offsets.size(); ++i) {
    std::vector<double> pw(m, 1.0);
    for (int j = 1; j < m; ++j) pw[j] = pw[j - 1] * offsets[i];
    for (int j = 0; j < m; ++j) {
      rhs[j] += pw[j] * ys[i];
      for (int k = 0; k < m; ++k) a[j * m + k] += pw[j] * pw[k];
    }
  }
  // Gaussian elimination with partial pivoting
  for (int col = 0; col < m; ++col) {
    int piv = col;
    for (int r = col + 1; r < m; ++r)
      if (std::fabs(a[r * m + col]) > std::fabs(a[piv * m + col])) piv = r;
    if (piv != col) {
      for (int k = 0; k < m; ++k) std::swap(a[col * m + k], a[piv * m + k]);
      std::swap(rhs[col], rhs[piv]);
    }
    const double d = a[col * m + col];
    for (int r = col + 1; r < m; ++r) {
      const double f = a[r * m + col] / d;
      for (int k = col; k < m; ++k) a[r * m + k] -= f * a[col * m + k];
      rhs[r] -= f * rhs[col];
    }
  }
  std::vector<double> beta(m, 0.0);
  for (int r = m - 1; r >= 0; --r) {
    double s = rhs[r];
    for (int k = r + 1; k < m; ++k) s -= a[r * m + k] * beta[k];
    beta[r] = s / a[r * m + r];
  }
  return beta[0];  // value at offset 0
}

}  // namespace

std::vector<double> savgol_smooth(const std::vector<double>& series,
                                  int window, int order) {
  if (window % 2 == 0) throw ConfigError("savgol: window must be odd");
  if (order >= window) throw ConfigError("savgol: order must be < window");
  if (order < 0 || window < 1) throw ConfigError("savgol: bad parameters");
  const auto n = static_cast<std::int64_t>(series.size());
  if (n < window)
    throw DataError("savgol: series length " + std::to_string(n) +
                    " < window " + std::to_string(window));

  const std::int64_t half = window / 2;
  std::vector<double> out(static_cast<size_t>(n));
  std::vector<double> offs, ys;
  for (std::int64_t t = 0; t < n; ++t) {
    // interior: centered window; edges: one-sided truncated window,
    // fit evaluated at the sample's own position
    const std::int64_t lo = std::max<std::int64_t>(0, t - half);
    const std::int64_t hi = std::min(n, t + half + 1);
    offs.clear();
    ys.clear();
    for (std::int64_t i = lo; i < hi; ++i) {
      offs.push_back(static_cast<double>(i - t));
      ys.push_back(series[static_cast<size_t>(i)]);
    }
    out[static_cast<size_t>(t)] = polyfit_at_zero(offs, ys, order);
  }
  return out;
}

HoldResult zero_order_hold(
    const std::vector<std::pair<double, double>>& samples,
    std::int64_t grid_len) {
  if (samples.empty()) throw DataError("zero_order_hold: no samples");
  for (size_t i = 1; i < samples.size(); ++i)
    if (samples[i].first <= samples[i - 1].first)
      throw DataError("zero_order_hold: times must be strictly increasing");

  HoldResult res;
  res.values.resize(static_cast<size_t>(grid_len));
  res.first_valid = static_cast<std::int64_t>(std::ceil(samples[0].first));
  if (res.first_valid < 0) res.first_valid = 0;
  size_t k = 0;
  for (std::int64_t i = 0; i < grid_len; ++i) {
    while (k + 1 < samples.size() &&
           samples[k + 1].first <= static_cast<double>(i))
      ++k;
    // indices before first_valid keep the first value; callers mask them
    res.values[static_cast<size_t>(i)] = samples[k].second;
  }
  return res;
}

}  // namespace physio::ingest

#include "physio/train/dataset.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "physio/errors.hpp"
#include "physio/hr/models.hpp"

namespace physio::train {

namespace {

const std::vector<double>& target_series(const ingest::FeatureSession& fs,
                                         TargetKind target) {
  return target == TargetKind::hr ? fs.hr : fs.vo2;
}

}  // namespace

io::Normalization fit_normalization(
    const std::vector<ingest::FeatureSession>& sessions, TargetKind target) {
  if (sessions.empty())
    throw ConfigError("fit_normalization: no sessions given");
  io::Normalization norm;
  norm.feature_names = sessions.front().feature_names;
  const auto d = static_cast<std::int64_t>(norm.feature_names.size());

  std::vector<double> sum(d, 0.0), sumsq(d, 0.0);
  std::int64_t rows = 0;
  double tsum = 0.0, tsumsq = 0.0;
  std::int64_t tcount = 0;
  for (const auto& fs : sessions) {
    if (fs.feature_names != norm.feature_names)
      throw DataError("fit_normalization: feature drift in session " +
                      fs.session_id);
    const auto& y = target_series(fs, target);
    for (std::int64_t t = 0; t < fs.T; ++t) {
      if (fs.mask[t] == 0.0) continue;
      ++rows;
      for (std::int64_t j = 0; j < d; ++j) {
        const double v = fs.x[t * fs.D + j];
        sum[j] += v;
        sumsq[j] += v * v;
      }
      if (static_cast<std::int64_t>(y.size()) > t) {
        tsum += y[t];
        tsumsq += y[t] * y[t];
        ++tcount;
      }
    }
  }
  if (rows == 0)
    throw DataError("fit_normalization: no observed samples in any session");
  if (tcount == 0)
    throw DataError("fit_normalization: no observed target samples");

  norm.feature_mean.resize(d);
  norm.feature_std.resize(d);
  for (std::int64_t j = 0; j < d; ++j) {
    norm.feature_mean[j] = sum[j] / static_cast<double>(rows);
    const double var =
        sumsq[j] / static_cast<double>(rows) - norm.feature_mean[j] * norm.feature_mean[j];
    norm.feature_std[j] = var > 1e-24 ? std::sqrt(var) : 1.0;
  }
  norm.target_mean = tsum / static_cast<double>(tcount);
  const double tvar =
      tsumsq / static_cast<double>(tcount) - norm.target_mean * norm.target_mean;
  norm.target_std = tvar > 1e-24 ? std::sqrt(tvar) : 1.0;
  return norm;
}

Dataset make_dataset(std::vector<ingest::FeatureSession> sessions,
                     TargetKind target, io::Normalization norm,
                     std::int64_t window_len, std::int64_t stride) {
  if (window_len < 2)
    throw ConfigError("make_dataset: window_len must be at least 2");
  if (stride < 1) throw ConfigError("make_dataset: stride must be positive");

  Dataset ds;
  ds.sessions = std::move(sessions);
  ds.norm = std::move(norm);
  ds.target = target;
  ds.window_len = window_len;
  for (std::size_t i = 0; i < ds.sessions.size(); ++i) {
    const auto& fs = ds.sessions[i];
    const auto& y = target_series(fs, target);
    if (y.empty())
      throw DataError("make_dataset: session " + fs.session_id +
                      " lacks the training target");
    for (const auto& w : ingest::segment_windows(fs.T, window_len, stride)) {
      if (w.length != window_len) continue;  // prediction handles tails
      if (fs.mask[w.start] == 0.0) continue;  // anchor must be observed
      ds.windows.push_back({static_cast<int>(i), w.start, w.length});
    }
  }
  return ds;
}

Batch assemble_batch(const Dataset& ds, const std::vector<WindowRef>& refs) {
  if (refs.empty()) throw ContractError("assemble_batch: empty batch");
  const auto b = static_cast<std::int64_t>(refs.size());
  const auto l = ds.window_len;
  const auto d = static_cast<std::int64_t>(ds.norm.feature_names.size());

  std::vector<double> x(b * l * d), target(b * l), mask(b * l);
  Batch out;
  out.anchor_raw.resize(b);
  for (std::int64_t r = 0; r < b; ++r) {
    const auto& ref = refs[r];
    if (ref.length != l)
      throw ContractError("assemble_batch: ragged window lengths");
    const auto& fs = ds.sessions[ref.session];
    const auto row = hr::window_tensor(fs, ds.norm, ref.start, ref.length);
    std::memcpy(x.data() + r * l * d, row.values().data(),
                sizeof(double) * static_cast<std::size_t>(l * d));
    const auto& y = target_series(fs, ds.target);
    for (std::int64_t t = 0; t < l; ++t) {
      target[r * l + t] = y[ref.start + t];
      mask[r * l + t] = fs.mask[ref.start + t];
    }
    out.anchor_raw[r] = y[ref.start];
  }
  out.x = ad::Tensor::from(
      {static_cast<int>(b), static_cast<int>(l), static_cast<int>(d)},
      std::move(x));
  out.target_raw = ad::Tensor::from({static_cast<int>(b), static_cast<int>(l)},
                                    std::move(target));
  out.mask = ad::Tensor::from({static_cast<int>(b), static_cast<int>(l)},
                              std::move(mask));
  return out;
}

std::vector<std::vector<WindowRef>> make_batches(const Dataset& ds,
                                                 int batch_size, Rng& rng) {
  if (batch_size < 1) throw ConfigError("make_batches: batch_size must be >= 1");
  auto order = ds.windows;
  for (auto i = static_cast<std::int64_t>(order.size()) - 1; i > 0; --i)
    std::swap(order[i], order[rng.uniform_int(0, static_cast<int>(i))]);
  std::vector<std::vector<WindowRef>> batches;
  for (std::size_t at = 0; at < order.size(); at += batch_size) {
    const auto end = std::min(order.size(), at + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(at),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

}  // namespace physio::train

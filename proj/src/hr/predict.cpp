#include <algorithm>
#include <optional>

#include "physio/errors.hpp"
#include "physio/hr/models.hpp"

namespace physio::hr {

namespace ad = physio::ad;

HrMode hr_mode_from_string(const std::string& s) {
  if (s == "standard") return HrMode::standard;
  if (s == "generative") return HrMode::generative;
  throw ConfigError("hr mode: expected standard|generative, got '" + s + "'");
}

ad::Tensor window_tensor(const ingest::FeatureSession& fs,
                         const io::Normalization& norm, std::int64_t start,
                         std::int64_t length) {
  if (fs.feature_names != norm.feature_names)
    throw DataError("window_tensor: features do not match normalization");
  if (start < 0 || length < 1 || start + length > fs.T)
    throw ShapeError("window_tensor: range out of bounds");
  const auto D = fs.D;
  std::vector<double> data(static_cast<size_t>(length * D));
  for (std::int64_t l = 0; l < length; ++l) {
    const auto row = start + l;
    const double m = fs.mask[static_cast<size_t>(row)];
    for (std::int64_t d = 0; d < D; ++d) {
      const double z = (fs.x[static_cast<size_t>(row * D + d)] -
                        norm.feature_mean[static_cast<size_t>(d)]) /
                       norm.feature_std[static_cast<size_t>(d)];
      data[static_cast<size_t>(l * D + d)] = z * m;
    }
  }
  return ad::Tensor::from(
      {1, static_cast<int>(length), static_cast<int>(D)}, std::move(data));
}

namespace {

double anchor_at(const ingest::FeatureSession& fs, std::int64_t t) {
  if (fs.hr.empty() || fs.mask[static_cast<size_t>(t)] == 0.0)
    throw DataError(fs.session_id + ": no valid heart rate to anchor at t=" +
                    std::to_string(t));
  return fs.hr[static_cast<size_t>(t)];
}

// Shared window walk. Both modes thread GRU state through the session;
// standard re-anchors each window on the observed value, generative chains
// its own decoded output (plus filter state, when the model has one).
template <typename ForwardFn>
std::vector<double> drive(const ingest::FeatureSession& fs,
                          const io::Normalization& norm, HrMode mode,
                          std::int64_t window_len, ForwardFn forward) {
  if (window_len < 2) throw ConfigError("predict: window length must be >= 2");
  if (fs.T < 1) throw DataError(fs.session_id + ": empty session");

  ad::NoGradGuard no_grad;
  std::vector<double> preds(static_cast<size_t>(fs.T), 0.0);
  std::vector<ad::Tensor> gru_carry;
  bool first = true;
  double h_carry = 0.0;

  for (std::int64_t s = 0; s < fs.T;) {
    const auto len = std::min(window_len, fs.T - s);
    const bool anchored = mode == HrMode::standard || first;
    const double h0 = anchored ? anchor_at(fs, s) : h_carry;

    if (len == 1) {
      preds[static_cast<size_t>(s)] = h0;
      break;
    }

    auto x = window_tensor(fs, norm, s, len);
    auto h0_t = ad::Tensor::from({1}, {h0});
    HrForward out =
        forward(x, h0_t, first ? nullptr : &gru_carry, first);
    const auto& h = out.h.values();
    std::copy(h.begin(), h.end(), preds.begin() + s);

    gru_carry = std::move(out.gru_carry);
    h_carry = h.back();
    first = false;
    s += len;
  }
  return preds;
}

}  // namespace

std::vector<double> predict_hr_session(const OdeHrModel& m,
                                       const ingest::FeatureSession& fs,
                                       const io::Normalization& norm,
                                       HrMode mode, std::int64_t window_len) {
  return drive(fs, norm, mode, window_len,
               [&](const ad::Tensor& x, const ad::Tensor& h0,
                   const std::vector<ad::Tensor>* carry, bool) {
                 return ode_hr_forward(m, x, h0, carry);
               });
}

std::vector<double> predict_hr_session(const KalmanHrModel& m,
                                       const ingest::FeatureSession& fs,
                                       const io::Normalization& norm,
                                       HrMode mode, std::int64_t window_len) {
  std::optional<KalmanHrCarry> fc;
  return drive(
      fs, norm, mode, window_len,
      [&](const ad::Tensor& x, const ad::Tensor& h0,
          const std::vector<ad::Tensor>* carry, bool first) {
        const KalmanHrCarry* fc_in =
            (mode == HrMode::generative && !first && fc) ? &*fc : nullptr;
        auto out = kalman_hr_forward(m, x, h0, carry, fc_in);
        if (mode == HrMode::generative) {
          const double sig = out.sigma.values()[0];
          fc = KalmanHrCarry{
              ad::Tensor::from({1}, {sig * out.final_state.gdot.values()[0]}),
              out.final_state.Pg, out.final_state.Pgd};
        }
        return out;
      });
}

}  // namespace physio::hr

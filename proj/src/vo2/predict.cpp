#include <algorithm>

#include "physio/errors.hpp"
#include "physio/hr/models.hpp"
#include "physio/vo2/model.hpp"

namespace physio::vo2 {

namespace ad = physio::ad;

std::vector<double> predict_vo2_session(const Vo2Model& m,
                                        const ingest::FeatureSession& fs,
                                        const io::Normalization& norm,
                                        std::int64_t window_len) {
  if (window_len < 2) throw ConfigError("predict: window length must be >= 2");
  if (fs.T < 1) throw DataError(fs.session_id + ": empty session");
  if (fs.vo2.empty() || fs.mask[0] == 0.0)
    throw DataError(fs.session_id +
                    ": no measured first second to initialize from");

  ad::NoGradGuard no_grad;
  const double ts = norm.target_std;
  std::vector<double> preds(static_cast<size_t>(fs.T), 0.0);
  double carry = (fs.vo2[0] - norm.target_mean) / ts;

  for (std::int64_t s = 0; s < fs.T;) {
    const auto len = std::min(window_len, fs.T - s);
    if (len == 1) {
      preds[static_cast<size_t>(s)] = carry * ts + norm.target_mean;
      break;
    }
    auto x = hr::window_tensor(fs, norm, s, len);
    auto y0 = ad::Tensor::from({1}, {carry});
    auto out = vo2_forward(m, x, &y0);
    const auto& y = out.y_seq.values();
    for (std::int64_t i = 0; i < len; ++i)
      preds[static_cast<size_t>(s + i)] =
          y[static_cast<size_t>(i)] * ts + norm.target_mean;
    carry = y.back();
    s += len;
  }
  return preds;
}

}  // namespace physio::vo2

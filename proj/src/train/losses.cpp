#include "physio/train/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "physio/errors.hpp"

namespace physio::train {

namespace {

ad::Tensor as_rows(const ad::Tensor& a) {
  if (a.ndim() == 1) return ad::reshape(a, {1, a.dim(0)});
  if (a.ndim() == 2) return a;
  throw ShapeError("loss input must be [T] or [B x T], got " +
                   ad::shape_str(a.shape()));
}

void check_same_shape(const ad::Tensor& a, const ad::Tensor& b,
                      const char* what) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(what) + ": shape mismatch " +
                     ad::shape_str(a.shape()) + " vs " +
                     ad::shape_str(b.shape()));
}

// first differences along time: [B x T] -> [B x (T-1)]
ad::Tensor tdiff(const ad::Tensor& a) {
  const int t = a.dim(1);
  return ad::sub(ad::slice_cols(a, 1, t - 1), ad::slice_cols(a, 0, t - 1));
}

}  // namespace

ad::Tensor masked_mae(const ad::Tensor& pred, const ad::Tensor& truth,
                      const ad::Tensor& mask) {
  const auto p = as_rows(pred), y = as_rows(truth), m = as_rows(mask);
  check_same_shape(p, y, "masked_mae");
  check_same_shape(p, m, "masked_mae");
  double msum = 0.0;
  for (double v : m.values()) msum += v;
  if (msum <= 0.0) throw DataError("masked_mae: every sample is masked out");
  const auto num = ad::sum(ad::mul(ad::abs_t(ad::sub(p, y)), m));
  return ad::mul_scalar(num, 1.0 / msum);
}

DynamicParts dynamic_loss_parts(const ad::Tensor& pred,
                                const ad::Tensor& truth,
                                double sign_sharpness) {
  const auto p = as_rows(pred), y = as_rows(truth);
  check_same_shape(p, y, "dynamic_loss");
  if (p.dim(1) < 3)
    throw ContractError("dynamic_loss: needs at least 3 steps, got " +
                        std::to_string(p.dim(1)));
  DynamicParts parts;
  parts.mae = ad::mean(ad::abs_t(ad::sub(p, y)));

  const auto dp = tdiff(p), dy = tdiff(y);
  parts.vel = ad::mean(ad::abs_t(ad::sub(dp, dy)));
  parts.acc = ad::mean(ad::abs_t(ad::sub(tdiff(dp), tdiff(dy))));

  // BCE(sigmoid(k dp), 1{dy > 0}) composed as softplus(l) - l y for
  // stability at large |l|
  std::vector<double> up(dy.numel());
  for (std::int64_t i = 0; i < dy.numel(); ++i)
    up[i] = dy.values()[i] > 0.0 ? 1.0 : 0.0;
  const auto target = ad::Tensor::from(dy.shape(), std::move(up));
  const auto l = ad::mul_scalar(dp, sign_sharpness);
  parts.sign = ad::mean(ad::sub(ad::softplus(l), ad::mul(l, target)));
  return parts;
}

ad::Tensor dynamic_loss(const ad::Tensor& pred, const ad::Tensor& truth,
                        double alpha_dyn, double sign_sharpness) {
  const auto parts = dynamic_loss_parts(pred, truth, sign_sharpness);
  auto inner = ad::add(ad::add(ad::mul_scalar(parts.vel, 0.5),
                               ad::mul_scalar(parts.acc, 0.3)),
                       ad::mul_scalar(parts.sign, 0.2));
  return ad::add(ad::mul_scalar(parts.mae, alpha_dyn),
                 ad::mul_scalar(inner, 1.0 - alpha_dyn));
}

double percentile_nearest_rank(std::vector<double> v, double q) {
  if (v.empty())
    throw ContractError("percentile_nearest_rank: empty sample");
  if (!(q > 0.0) || q > 1.0)
    throw ContractError("percentile_nearest_rank: q must be in (0, 1]");
  std::sort(v.begin(), v.end());
  const auto n = static_cast<std::int64_t>(v.size());
  auto rank = static_cast<std::int64_t>(std::ceil(q * static_cast<double>(n)));
  rank = std::clamp<std::int64_t>(rank, 1, n);
  return v[rank - 1];
}

ad::Tensor aux_loss_vo2(const vo2::Vo2Output& out,
                        const ad::Tensor& truth_raw) {
  const auto y = as_rows(truth_raw);
  const int b = y.dim(0), t = y.dim(1);
  if (t < 2) throw ContractError("aux_loss_vo2: needs at least 2 steps");
  if (out.mu.ndim() != 1 || out.mu.dim(0) != b)
    throw ShapeError("aux_loss_vo2: moment heads must be [B]");

  std::vector<double> mu_t(b), sig_t(b), del_t(b);
  for (int r = 0; r < b; ++r) {
    const double* row = y.values().data() + static_cast<std::int64_t>(r) * t;
    double s = 0.0;
    for (int i = 0; i < t; ++i) s += row[i];
    mu_t[r] = s / t;
    double ss = 0.0;
    for (int i = 0; i < t; ++i) ss += (row[i] - mu_t[r]) * (row[i] - mu_t[r]);
    sig_t[r] = std::sqrt(ss / t);
    std::vector<double> steps(t - 1);
    for (int i = 0; i + 1 < t; ++i) steps[i] = std::abs(row[i + 1] - row[i]);
    del_t[r] = percentile_nearest_rank(std::move(steps), 0.95);
  }
  const auto mu_true = ad::Tensor::from({b}, std::move(mu_t));
  const auto sig_true = ad::Tensor::from({b}, std::move(sig_t));
  const auto del_true = ad::Tensor::from({b}, std::move(del_t));

  auto per_row = ad::add(ad::abs_t(ad::sub(out.mu, mu_true)),
                         ad::abs_t(ad::sub(out.sigma, sig_true)));
  per_row = ad::add(per_row, ad::mul_scalar(
                                 ad::abs_t(ad::sub(out.delta_raw, del_true)),
                                 0.5));
  return ad::mean(per_row);
}

ad::Tensor hr_total_loss(const ad::Tensor& pred, const ad::Tensor& truth,
                         const ad::Tensor& mask, const ad::Tensor& mu_hat,
                         const ad::Tensor& sigma_hat, double lambda) {
  const auto p = as_rows(pred), y = as_rows(truth), m = as_rows(mask);
  const auto base = masked_mae(p, y, m);
  const int b = p.dim(0), t = p.dim(1);
  if (mu_hat.ndim() != 1 || mu_hat.dim(0) != b)
    throw ShapeError("hr_total_loss: moment heads must be [B]");

  std::vector<double> mu_o(b), sig_o(b);
  for (int r = 0; r < b; ++r) {
    const std::int64_t off = static_cast<std::int64_t>(r) * t;
    double msum = 0.0, acc = 0.0;
    for (int i = 0; i < t; ++i) {
      msum += m.values()[off + i];
      acc += m.values()[off + i] * y.values()[off + i];
    }
    if (msum <= 0.0)
      throw DataError("hr_total_loss: row " + std::to_string(r) +
                      " has no observed samples");
    mu_o[r] = acc / msum;
    double ss = 0.0;
    for (int i = 0; i < t; ++i) {
      const double d = y.values()[off + i] - mu_o[r];
      ss += m.values()[off + i] * d * d;
    }
    sig_o[r] = std::sqrt(ss / msum);
  }
  const auto mu_obs = ad::Tensor::from({b}, std::move(mu_o));
  const auto sig_obs = ad::Tensor::from({b}, std::move(sig_o));
  const auto aux = ad::mean(ad::add(ad::abs_t(ad::sub(mu_hat, mu_obs)),
                                    ad::abs_t(ad::sub(sigma_hat, sig_obs))));
  return ad::add(base, ad::mul_scalar(aux, lambda));
}

ad::Tensor vo2_total_loss(const vo2::Vo2Output& out,
                          const ad::Tensor& truth_raw, const ad::Tensor& mask,
                          double target_mean, double target_std,
                          const LossWeights& w) {
  const auto pred_raw =
      ad::add_scalar(ad::mul_scalar(out.y_seq, target_std), target_mean);
  auto total = ad::mul_scalar(masked_mae(pred_raw, truth_raw, mask), w.w_base);
  if (w.w_dynamic != 0.0)
    total = ad::add(total, ad::mul_scalar(dynamic_loss(pred_raw, truth_raw,
                                                       w.alpha_dyn),
                                          w.w_dynamic));
  if (w.w_aux != 0.0)
    total = ad::add(total,
                    ad::mul_scalar(aux_loss_vo2(out, truth_raw), w.w_aux));
  return total;
}

}  // namespace physio::train

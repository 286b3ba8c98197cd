#pragma once

#include <vector>

#include "physio/ad/ops.hpp"
#include "physio/train/schedules.hpp"
#include "physio/vo2/model.hpp"

namespace physio::train {

// All sequence losses take [B x T] tensors in raw signal units (bpm or
// ml/min); predictions are denormalized before they get here.

// sum |p - y| m / sum m; every-element-masked input is rejected
ad::Tensor masked_mae(const ad::Tensor& pred, const ad::Tensor& truth,
                      const ad::Tensor& mask);

// the unmasked pieces of the dynamics-aware loss, each a scalar tensor
struct DynamicParts {
  ad::Tensor mae;   // mean |p - y|
  ad::Tensor vel;   // mean |dp - dy| over first differences
  ad::Tensor acc;   // same over second differences
  ad::Tensor sign;  // BCE of sigmoid(k dp) against 1{dy > 0}
};

DynamicParts dynamic_loss_parts(const ad::Tensor& pred,
                                const ad::Tensor& truth,
                                double sign_sharpness = 10.0);

// alpha mae + (1 - alpha)(0.5 vel + 0.3 acc + 0.2 sign); needs T >= 3
ad::Tensor dynamic_loss(const ad::Tensor& pred, const ad::Tensor& truth,
                        double alpha_dyn, double sign_sharpness = 10.0);

// nearest-rank percentile, q in (0, 1]; sorts a copy
double percentile_nearest_rank(std::vector<double> v, double q);

// |mu - mu_true| + |sigma - sigma_true| + 0.5 |delta - delta_true|, averaged
// over the batch. True moments use the population SD and the 0.95 quantile
// of absolute consecutive differences, computed per row of truth_raw.
ad::Tensor aux_loss_vo2(const vo2::Vo2Output& out, const ad::Tensor& truth_raw);

// masked_mae + lambda (|mu_hat - mu_obs| + |sigma_hat - sigma_obs|) with the
// observed moments taken over each row's unmasked samples
ad::Tensor hr_total_loss(const ad::Tensor& pred, const ad::Tensor& truth,
                         const ad::Tensor& mask, const ad::Tensor& mu_hat,
                         const ad::Tensor& sigma_hat, double lambda = 0.1);

// w_base masked_mae + w_dynamic dynamic_loss + w_aux aux_loss_vo2, with the
// prediction denormalized to raw units first
ad::Tensor vo2_total_loss(const vo2::Vo2Output& out, const ad::Tensor& truth_raw,
                          const ad::Tensor& mask, double target_mean,
                          double target_std, const LossWeights& w);

}  // namespace physio::train

#include "physio/train/schedules.hpp"

#include <algorithm>
#include <cmath>

#include "physio/errors.hpp"

namespace physio::train {

LossWeights curriculum(int epoch) {
  LossWeights w;
  w.w_base = std::max(0.3, 1.0 - epoch / 20.0);
  w.w_dynamic = 1.0 - w.w_base;
  w.w_aux = std::min(0.3, 0.1 + 0.01 * epoch);
  return w;
}

double clip_value(int epoch) { return 1.0 + 4.0 * std::exp(-epoch / 10.0); }

double cosine_warm_restart_lr(int epoch, double lr0, int t0, int t_mult,
                              double eta_min) {
  if (epoch < 0 || t0 < 1 || t_mult < 1)
    throw ConfigError("cosine_warm_restart_lr: epoch >= 0, t0 >= 1, t_mult >= 1 required");
  int cycle_len = t0;
  int pos = epoch;
  while (pos >= cycle_len) {
    pos -= cycle_len;
    cycle_len *= t_mult;
  }
  const double frac = static_cast<double>(pos) / cycle_len;
  return eta_min + 0.5 * (lr0 - eta_min) * (1.0 + std::cos(M_PI * frac));
}

void PlateauScheduler::observe(double value) {
  if (!seen_ || value < best_) {
    best_ = value;
    seen_ = true;
    bad_ = 0;
    return;
  }
  if (++bad_ > patience_) {
    lr_ = std::max(lr_ * factor_, min_lr_);
    bad_ = 0;
  }
}

}  // namespace physio::train

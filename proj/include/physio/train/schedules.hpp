#pragma once

namespace physio::train {

// per-epoch weights of the composite sequence loss
struct LossWeights {
  double w_base = 1.0;
  double w_dynamic = 0.0;
  double w_aux = 0.1;
  double alpha_dyn = 0.5;  // inner MAE share of the dynamic term
  double lambda_hr = 0.1;  // moment penalty weight of the HR loss
};

// w_base = max(0.3, 1 - e/20), w_dynamic = 1 - w_base,
// w_aux = min(0.3, 0.1 + 0.01 e); alpha_dyn and lambda_hr keep defaults
LossWeights curriculum(int epoch);

// 1 + 4 exp(-e/10), the adaptive gradient-norm bound
double clip_value(int epoch);

// cosine annealing with warm restarts; cycle i has length t0 * t_mult^i and
// the rate returns to lr0 at every restart
double cosine_warm_restart_lr(int epoch, double lr0, int t0, int t_mult,
                              double eta_min);

// Halves (by `factor`) the rate once the observed value has gone `patience`
// epochs without strictly improving, then starts counting afresh.
class PlateauScheduler {
 public:
  PlateauScheduler(double lr0, double factor, int patience,
                   double min_lr = 0.0)
      : lr_(lr0), factor_(factor), patience_(patience), min_lr_(min_lr) {}

  void observe(double value);
  double lr() const { return lr_; }

 private:
  double lr_;
  double factor_;
  int patience_;
  double min_lr_;
  double best_ = 0.0;
  bool seen_ = false;
  int bad_ = 0;
};

}  // namespace physio::train

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "physio/ad/param_store.hpp"

namespace physio::train {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  bool decoupled = false;  // false: decay added to the gradient (Adam);
                           // true: decay applied to the weights (AdamW)
};

// Moment state is keyed by parameter path, so the update is independent of
// construction order; parameters that saw no gradient this step are skipped.
class Adam {
 public:
  Adam(ad::ParamStore& ps, AdamConfig cfg) : ps_(&ps), cfg_(cfg) {}

  void set_lr(double lr) { cfg_.lr = lr; }
  double lr() const { return cfg_.lr; }

  void step();

 private:
  struct Slot {
    std::vector<double> m, v;
    std::int64_t t = 0;
  };
  ad::ParamStore* ps_;
  AdamConfig cfg_;
  std::map<std::string, Slot> slots_;
};

double global_grad_norm(const ad::ParamStore& ps);

// scales all gradients so their global norm is at most max_norm; returns the
// norm found before scaling
double clip_grad_norm(ad::ParamStore& ps, double max_norm);

}  // namespace physio::train

#pragma once

// Independent scalar reference for the VO2 filter model: a step-by-step
// B=1 re-implementation on plain doubles that reads the same parameter
// store but shares no tensor or kernel code with the production path.

#include <vector>

#include "physio/ad/param_store.hpp"
#include "physio/vo2/model.hpp"

namespace vo2ref {

struct Result {
  std::vector<double> y;  // normalized units, length T
  double mu = 0.0, sigma = 0.0, delta_raw = 0.0;
};

// window: T rows of D features; y0_true optional (normalized units).
// Only the fixed-schedule model (learned_schedules off) is covered.
Result forward(const physio::ad::ParamStore& ps,
               const physio::vo2::Vo2Spec& spec,
               const std::vector<std::vector<double>>& window,
               const double* y0_true);

}  // namespace vo2ref

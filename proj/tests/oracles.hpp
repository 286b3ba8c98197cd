#pragma once

// Independent reference implementations used to check derived quantities.
// Everything here works on plain doubles and stays clear of the production
// code paths it is meant to verify.

#include <functional>
#include <string>
#include <vector>

#include "physio/ad/param_store.hpp"
#include "physio/ad/tensor.hpp"

namespace oracles {

// Central finite differences over every value in every parameter of the
// store. loss() must rebuild the graph from current parameter values.
// Relative error per element: |a - fd| <= tol * max(|a|, |fd|), with a
// both-tiny escape below abs_floor. Returns a human-readable failure list
// (empty when all match).
struct FdReport {
  int checked = 0;
  int failed = 0;
  double worst_rel = 0.0;
  std::string first_failure;
};

FdReport check_gradients(physio::ad::ParamStore& ps,
                         const std::function<physio::ad::Tensor()>& make_loss,
                         double step, double tol, double abs_floor = 1e-7);

// Least-squares fit of a degree-`order` polynomial through (xs, ys) by
// Householder QR on the Vandermonde matrix, evaluated at x_eval.
double polyfit_eval(const std::vector<double>& xs,
                    const std::vector<double>& ys, int order, double x_eval);

}  // namespace oracles

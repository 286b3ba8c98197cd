#pragma once

#include <string>
#include <vector>

#include "physio/ad/ops.hpp"
#include "physio/ad/param_store.hpp"

namespace physio::nn {

struct MlpSpec {
  std::vector<int> widths;    // [in, hidden..., out], at least one layer
  double leaky_slope = 0.01;  // hidden activation
  double dropout = 0.0;       // after each hidden activation, training only
  enum class Out { identity, softplus, sigmoid };
  Out out = Out::identity;
};

struct Mlp {
  MlpSpec spec;
  std::vector<ad::Tensor> w, b;

  // create draws fresh parameters, bind attaches to existing ones
  static Mlp create(ad::ParamStore& ps, const std::string& prefix,
                    MlpSpec spec);
  static Mlp bind(const ad::ParamStore& ps, const std::string& prefix,
                  MlpSpec spec);

  // x: [rows x widths.front()] -> [rows x widths.back()]
  ad::Tensor forward(const ad::Tensor& x, bool training = false,
                     Rng* rng = nullptr) const;
};

}  // namespace physio::nn

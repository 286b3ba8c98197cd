#pragma once

#include <string>
#include <vector>

#include "physio/ad/ops.hpp"
#include "physio/ad/param_store.hpp"

namespace physio::nn {

struct GruSpec {
  int input = 0;
  int hidden = 0;
  int layers = 1;
  bool bidirectional = false;
  double dropout = 0.0;  // between stacked layers, training only
};

struct GruOut {
  ad::Tensor states;  // [B x T x H] or [B x T x 2H]
  // last layer: forward state at T-1, concatenated with backward state at 0
  // when bidirectional
  ad::Tensor final;
  // per-layer forward-direction h at T-1, for carrying across windows
  std::vector<ad::Tensor> layer_carry;
};

// Gate layout in the fused matrices is [r | z | n] thirds.
struct Gru {
  GruSpec spec;
  struct Dir {
    ad::Tensor wx, wh, bx, bh;  // [D x 3H], [H x 3H], [3H], [3H]
  };
  std::vector<Dir> fwd, bwd;  // indexed by layer

  static Gru create(ad::ParamStore& ps, const std::string& prefix,
                    GruSpec spec);
  static Gru bind(const ad::ParamStore& ps, const std::string& prefix,
                  GruSpec spec);

  // x: [B x T x input]; carry (optional) holds per-layer initial forward
  // hidden states [B x H]; only valid for unidirectional stacks.
  GruOut forward(const ad::Tensor& x, const std::vector<ad::Tensor>* carry = nullptr,
                 bool training = false, Rng* rng = nullptr) const;
};

}  // namespace physio::nn

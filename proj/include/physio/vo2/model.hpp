#pragma once

#include <string>
#include <vector>

#include "physio/ad/ops.hpp"
#include "physio/ad/param_store.hpp"
#include "physio/ingest/ingest.hpp"
#include "physio/io/checkpoint.hpp"
#include "physio/nn/gru.hpp"
#include "physio/nn/mlp.hpp"

namespace physio::vo2 {

struct Vo2Spec {
  int input = 15;
  int enc_hidden = 64;
  int hidden = 128;  // per-direction GRU width
  int layers = 4;
  int head_hidden = 32;
  double dropout = 0.0;

  // filter constants; the estimate runs in z-scored target units
  double var_floor = 0.1;     // Q, R, P0, sigma floors
  double delta_floor = 20.0;  // ml/min, raw scale
  double target_sigma = 1.0;  // raw std used to normalize the delta clamp
  double trend_weight = 0.5;
  double blend_scale = 0.6;
  int blend_horizon = 10;
  double eps = 1e-6;

  // optional learned replacements for the fixed schedules
  bool learned_schedules = false;
};

// "256-2": hidden 256, 2 layers; "128-4": hidden 128, 4 layers (default)
Vo2Spec vo2_preset(const std::string& name);

struct Vo2Model {
  Vo2Spec spec;
  nn::Mlp encoder;  // per-step features -> GRU input
  nn::Gru gru;      // bidirectional
  // per-sequence heads, fed s_final
  nn::Mlp f_q, f_r, f_init, f_p0, f_mu, f_sigma, f_delta;
  // per-step heads, fed s_t
  nn::Mlp f_obs, f_dyn, f_direct;
  // learned_schedules only
  nn::Mlp f_trend, f_blend, f_dmin;
};

Vo2Model make_vo2(ad::ParamStore& ps, const Vo2Spec& spec);
Vo2Model bind_vo2(const ad::ParamStore& ps, const Vo2Spec& spec);

// All [B]. Filter quantities are in normalized target units; mu, sigma and
// delta_raw stay raw for the auxiliary loss, and delta = delta_raw /
// target_sigma is the normalized innovation clamp.
struct Vo2Params {
  ad::Tensor q, r, y0_init, p0;
  ad::Tensor mu, sigma, delta_raw;
  ad::Tensor delta;
  ad::Tensor delta_lo;  // lower clamp magnitude; equals delta unless learned
};

Vo2Params predict_params(const Vo2Model& m, const ad::Tensor& s_final,
                         bool training = false, Rng* rng = nullptr);

// z_t = f_obs(s_t), scaled by the sigmoid dynamics factor when a previous
// step exists
ad::Tensor measure(const Vo2Model& m, const ad::Tensor& s_t,
                   const ad::Tensor* s_tm1, bool training = false,
                   Rng* rng = nullptr);

struct Vo2State {
  ad::Tensor y_hat, y_prev;  // estimates at t and t-1
  ad::Tensor p;
  int t = 0;
};

// prediction for step t+1: y_hat + w*(y_hat - y_prev), or y_hat when only
// one estimate exists yet
ad::Tensor trend_predict(const Vo2State& s, const ad::Tensor& trend_w);

struct Vo2StepOut {
  ad::Tensor y_kf, p;     // updated estimate and variance
  ad::Tensor p_pre;       // variance after the prediction half-step
  ad::Tensor k, nu_c;     // gain and clamped innovation
  ad::Tensor y_pred;      // trend prediction the update was applied to
};

Vo2StepOut kalman_vo2_step(const Vo2State& s, const ad::Tensor& z,
                           const Vo2Params& pr, const ad::Tensor& trend_w,
                           double eps);

// alpha_t = blend_scale * (1 - t/horizon) for t < horizon, else exactly 0
double blend_alpha(int t, double scale, int horizon);

// flattened over batch and steps, for invariant sweeps
struct Vo2Trace {
  std::vector<double> k, p_pre, p_post, nu_c, delta, correction, y_kf;
};

struct Vo2Output {
  ad::Tensor y_seq;             // [B x T] normalized units
  ad::Tensor mu, sigma, delta_raw;  // [B] raw units, for the auxiliary loss
};

Vo2Output vo2_forward(const Vo2Model& m, const ad::Tensor& window,
                      const ad::Tensor* y0_true, bool training = false,
                      Rng* rng = nullptr, Vo2Trace* trace = nullptr);

// non-overlapping windows; window 0 is initialized from the measured first
// second, later windows chain the carried estimate; raw-unit output
std::vector<double> predict_vo2_session(const Vo2Model& m,
                                        const ingest::FeatureSession& fs,
                                        const io::Normalization& norm,
                                        std::int64_t window_len = 60);

}  // namespace physio::vo2

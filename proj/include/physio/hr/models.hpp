#pragma once

#include <string>
#include <vector>

#include "physio/ad/ops.hpp"
#include "physio/ad/param_store.hpp"
#include "physio/ingest/ingest.hpp"
#include "physio/io/checkpoint.hpp"
#include "physio/nn/gru.hpp"
#include "physio/nn/mlp.hpp"

namespace physio::hr {

struct BackboneSpec {
  int input = 8;
  int enc_hidden = 64;
  int hidden = 64;  // GRU width
  int gru_layers = 2;
  int head_hidden = 32;
  double dropout = 0.0;
};

// "large": hidden 128, 2 layers; "small": hidden 64, 3 layers
BackboneSpec backbone_preset(const std::string& name);

struct Backbone {
  BackboneSpec spec;
  nn::Mlp encoder;     // per-step features -> GRU input
  nn::Gru gru;         // unidirectional, carries across windows
  nn::Mlp mu_head;     // s_final -> decoded mean (bpm)
  nn::Mlp sigma_head;  // softplus + 1e-3 floor
};

Backbone make_backbone(ad::ParamStore& ps, const std::string& prefix,
                       const BackboneSpec& spec);
Backbone bind_backbone(const ad::ParamStore& ps, const std::string& prefix,
                       const BackboneSpec& spec);

struct BackboneOut {
  ad::Tensor s_seq;    // [B x T x H]
  ad::Tensor s_final;  // [B x H]
  ad::Tensor mu;       // [B]
  ad::Tensor sigma;    // [B], > 0
  std::vector<ad::Tensor> gru_carry;
};

BackboneOut backbone_forward(const Backbone& bb, const ad::Tensor& window,
                             const std::vector<ad::Tensor>* carry = nullptr,
                             bool training = false, Rng* rng = nullptr);

// affine decode: h = sigma * g + mu, broadcast over time
ad::Tensor decode_hr(const ad::Tensor& g_seq, const ad::Tensor& mu,
                     const ad::Tensor& sigma);

struct OdeHrSpec {
  BackboneSpec backbone;
  int demand_hidden = 32;
  double dt = 1.0;
  double hr_min = 30.0;
  double hr_max = 220.0;
};

struct OdeHrModel {
  OdeHrSpec spec;
  Backbone bb;
  nn::Mlp demand;  // s_t -> d_t
};

OdeHrModel make_ode_hr(ad::ParamStore& ps, const OdeHrSpec& spec);
OdeHrModel bind_ode_hr(const ad::ParamStore& ps, const OdeHrSpec& spec);

// one RK4 step of dg/dt = d - g with d held constant
ad::Tensor rk4_step(const ad::Tensor& g, const ad::Tensor& d, double dt);

// g_seq[0] = g0; each later entry advances one RK4 step on d(s_t),
// clipped to the latent bounds
ad::Tensor ode_integrate(const OdeHrModel& m, const ad::Tensor& s_seq,
                         const ad::Tensor& g0, const ad::Tensor& lat_lo,
                         const ad::Tensor& lat_hi, bool training = false,
                         Rng* rng = nullptr);

struct KalmanHrSpec {
  BackboneSpec backbone;
  int head_hidden = 32;
  double hr_min = 30.0;
  double hr_max = 220.0;
  double gamma = 0.5;       // fixed velocity damping
  double p0 = 1.0;          // initial diagonal covariance
  double var_floor = 1e-4;  // Q/R softplus floor
};

struct KalmanHrModel {
  KalmanHrSpec spec;
  Backbone bb;
  nn::Mlp f_tr;     // [s_t, g, gdot] -> state residual (2)
  nn::Mlp f_obs;    // s_t -> latent observation
  nn::Mlp f_gain;   // [Pg-, Pgd-, R] -> gain, sigmoid
  nn::Mlp f_noise;  // s_t -> Q diagonal (2), softplus + floor
  nn::Mlp f_meas;   // s_t -> R, softplus + floor
};

KalmanHrModel make_kalman_hr(ad::ParamStore& ps, const KalmanHrSpec& spec);
KalmanHrModel bind_kalman_hr(const ad::ParamStore& ps,
                             const KalmanHrSpec& spec);

struct KalmanHrState {
  ad::Tensor g, gdot;  // [B] each
  ad::Tensor Pg, Pgd;
};

// update arithmetic after the prediction step: state is (z+, P-)
KalmanHrState kalman_hr_update(const KalmanHrState& pred, const ad::Tensor& nu,
                               const ad::Tensor& k, double gamma);

// flattened over batch and steps, for invariant sweeps
struct KalmanHrStats {
  std::vector<double> k, pg_pre, pgd_pre, pg_post, pgd_post, q_g, q_gd, r, nu;
};

KalmanHrState kalman_hr_step(const KalmanHrModel& m, const KalmanHrState& s,
                             const ad::Tensor& s_t, const ad::Tensor& lat_lo,
                             const ad::Tensor& lat_hi, bool training = false,
                             Rng* rng = nullptr, KalmanHrStats* stats = nullptr);

struct HrForward {
  ad::Tensor h;          // [B x T] decoded bpm
  ad::Tensor g;          // [B x T] latent
  ad::Tensor mu, sigma;  // [B]
  std::vector<ad::Tensor> gru_carry;
  KalmanHrState final_state;  // kalman only
};

// carried filter state for generative window chaining, in bpm units so it
// survives re-anchoring under the next window's moments
struct KalmanHrCarry {
  ad::Tensor v_bpm;    // sigma_prev * gdot
  ad::Tensor Pg, Pgd;  // latent-units covariance, carried as-is
};

HrForward ode_hr_forward(const OdeHrModel& m, const ad::Tensor& window,
                         const ad::Tensor& h0,
                         const std::vector<ad::Tensor>* carry = nullptr,
                         bool training = false, Rng* rng = nullptr);

HrForward kalman_hr_forward(const KalmanHrModel& m, const ad::Tensor& window,
                            const ad::Tensor& h0,
                            const std::vector<ad::Tensor>* carry = nullptr,
                            const KalmanHrCarry* filter_carry = nullptr,
                            bool training = false, Rng* rng = nullptr,
                            KalmanHrStats* stats = nullptr);

enum class HrMode { standard, generative };
HrMode hr_mode_from_string(const std::string& s);

// feature z-scoring + masked-row zeroing, shared with the vo2 model
ad::Tensor window_tensor(const ingest::FeatureSession& fs,
                         const io::Normalization& norm, std::int64_t start,
                         std::int64_t length);

std::vector<double> predict_hr_session(const OdeHrModel& m,
                                       const ingest::FeatureSession& fs,
                                       const io::Normalization& norm,
                                       HrMode mode,
                                       std::int64_t window_len = 60);
std::vector<double> predict_hr_session(const KalmanHrModel& m,
                                       const ingest::FeatureSession& fs,
                                       const io::Normalization& norm,
                                       HrMode mode,
                                       std::int64_t window_len = 60);

}  // namespace physio::hr

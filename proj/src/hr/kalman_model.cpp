#include "physio/errors.hpp"
#include "physio/hr/models.hpp"

namespace physio::hr {

namespace ad = physio::ad;

namespace {

nn::MlpSpec head(const KalmanHrSpec& s, int in, int out, nn::MlpSpec::Out o) {
  nn::MlpSpec m;
  m.widths = {in, s.head_hidden, out};
  m.dropout = s.backbone.dropout;
  m.out = o;
  return m;
}

ad::Tensor latent_bound(const ad::Tensor& mu, const ad::Tensor& sigma,
                        double hr_bound) {
  auto b = ad::Tensor::full(mu.shape(), hr_bound);
  return ad::div(ad::sub(b, mu), sigma);
}

void append_values(std::vector<double>& dst, const ad::Tensor& t) {
  const auto& v = t.values();
  dst.insert(dst.end(), v.begin(), v.end());
}

template <typename MakeBackbone, typename MakeMlp>
KalmanHrModel assemble(const KalmanHrSpec& spec, MakeBackbone bb,
                       MakeMlp mlp) {
  using Out = nn::MlpSpec::Out;
  const int H = spec.backbone.hidden;
  KalmanHrModel m;
  m.spec = spec;
  m.bb = bb();
  m.f_tr = mlp("kal.tr", head(spec, H + 2, 2, Out::identity));
  m.f_obs = mlp("kal.obs", head(spec, H, 1, Out::identity));
  m.f_gain = mlp("kal.gain", head(spec, 3, 1, Out::sigmoid));
  m.f_noise = mlp("kal.noise", head(spec, H, 2, Out::softplus));
  m.f_meas = mlp("kal.meas", head(spec, H, 1, Out::softplus));
  return m;
}

}  // namespace

KalmanHrModel make_kalman_hr(ad::ParamStore& ps, const KalmanHrSpec& spec) {
  return assemble(
      spec, [&] { return make_backbone(ps, "kal", spec.backbone); },
      [&](const char* n, nn::MlpSpec s) {
        return nn::Mlp::create(ps, n, std::move(s));
      });
}

KalmanHrModel bind_kalman_hr(const ad::ParamStore& ps,
                             const KalmanHrSpec& spec) {
  return assemble(
      spec, [&] { return bind_backbone(ps, "kal", spec.backbone); },
      [&](const char* n, nn::MlpSpec s) {
        return nn::Mlp::bind(ps, n, std::move(s));
      });
}

KalmanHrState kalman_hr_update(const KalmanHrState& pred, const ad::Tensor& nu,
                               const ad::Tensor& k, double gamma) {
  auto knu = ad::mul(k, nu);
  KalmanHrState out;
  out.g = ad::add(pred.g, knu);
  out.gdot = ad::add(pred.gdot, ad::mul_scalar(knu, gamma));
  out.Pg = ad::mul(pred.Pg, ad::add_scalar(ad::neg(k), 1.0));
  out.Pgd =
      ad::mul(pred.Pgd, ad::add_scalar(ad::mul_scalar(k, -gamma), 1.0));
  return out;
}

KalmanHrState kalman_hr_step(const KalmanHrModel& m, const KalmanHrState& s,
                             const ad::Tensor& s_t, const ad::Tensor& lat_lo,
                             const ad::Tensor& lat_hi, bool training, Rng* rng,
                             KalmanHrStats* stats) {
  const auto B = s_t.dim(0);
  auto dz = m.f_tr.forward(ad::concat_cols({s_t, s.g, s.gdot}), training, rng);
  auto g_plus = ad::add(s.g, ad::reshape(ad::slice_cols(dz, 0, 1), {B}));
  auto gdot_plus = ad::add(s.gdot, ad::reshape(ad::slice_cols(dz, 1, 1), {B}));

  auto q = ad::add_scalar(m.f_noise.forward(s_t, training, rng),
                          m.spec.var_floor);
  auto q_g = ad::reshape(ad::slice_cols(q, 0, 1), {B});
  auto q_gd = ad::reshape(ad::slice_cols(q, 1, 1), {B});
  auto pg_minus = ad::add(s.Pg, q_g);
  auto pgd_minus = ad::add(s.Pgd, q_gd);
  auto r = ad::add_scalar(
      ad::reshape(m.f_meas.forward(s_t, training, rng), {B}),
      m.spec.var_floor);

  auto nu = ad::sub(ad::reshape(m.f_obs.forward(s_t, training, rng), {B}),
                    g_plus);
  auto gain_in = ad::concat_cols({pg_minus, pgd_minus, r});
  auto k = ad::clamp(ad::reshape(m.f_gain.forward(gain_in, training, rng), {B}),
                     1e-12, 1.0 - 1e-12);

  KalmanHrState pred{g_plus, gdot_plus, pg_minus, pgd_minus};
  auto out = kalman_hr_update(pred, nu, k, m.spec.gamma);
  out.g = ad::clamp(out.g, lat_lo, lat_hi);

  if (stats) {
    append_values(stats->k, k);
    append_values(stats->pg_pre, pg_minus);
    append_values(stats->pgd_pre, pgd_minus);
    append_values(stats->pg_post, out.Pg);
    append_values(stats->pgd_post, out.Pgd);
    append_values(stats->q_g, q_g);
    append_values(stats->q_gd, q_gd);
    append_values(stats->r, r);
    append_values(stats->nu, nu);
  }
  return out;
}

HrForward kalman_hr_forward(const KalmanHrModel& m, const ad::Tensor& window,
                            const ad::Tensor& h0,
                            const std::vector<ad::Tensor>* carry,
                            const KalmanHrCarry* filter_carry, bool training,
                            Rng* rng, KalmanHrStats* stats) {
  auto bb = backbone_forward(m.bb, window, carry, training, rng);
  const auto B = window.dim(0), T = window.dim(1);
  auto lo = latent_bound(bb.mu, bb.sigma, m.spec.hr_min);
  auto hi = latent_bound(bb.mu, bb.sigma, m.spec.hr_max);

  KalmanHrState state;
  state.g = ad::clamp(ad::div(ad::sub(h0, bb.mu), bb.sigma), lo, hi);
  if (filter_carry) {
    state.gdot = ad::div(filter_carry->v_bpm, bb.sigma);
    state.Pg = filter_carry->Pg;
    state.Pgd = filter_carry->Pgd;
  } else {
    state.gdot = ad::Tensor::zeros({B});
    state.Pg = ad::Tensor::full({B}, m.spec.p0);
    state.Pgd = ad::Tensor::full({B}, m.spec.p0);
  }

  std::vector<ad::Tensor> steps;
  steps.reserve(static_cast<size_t>(T));
  steps.push_back(state.g);
  for (std::int64_t t = 1; t < T; ++t) {
    auto s_t = ad::select_time(bb.s_seq, static_cast<int>(t));
    state = kalman_hr_step(m, state, s_t, lo, hi, training, rng, stats);
    steps.push_back(state.g);
  }

  HrForward out;
  out.g = ad::stack_cols(steps);
  out.h = decode_hr(out.g, bb.mu, bb.sigma);
  out.mu = bb.mu;
  out.sigma = bb.sigma;
  out.gru_carry = std::move(bb.gru_carry);
  out.final_state = state;
  return out;
}

}  // namespace physio::hr

#include "physio/errors.hpp"
#include "physio/hr/models.hpp"

namespace physio::hr {

namespace ad = physio::ad;

namespace {

nn::MlpSpec demand_spec(const OdeHrSpec& s) {
  nn::MlpSpec m;
  m.widths = {s.backbone.hidden, s.demand_hidden, 1};
  m.dropout = s.backbone.dropout;
  return m;
}

ad::Tensor latent_bound(const ad::Tensor& mu, const ad::Tensor& sigma,
                        double hr_bound) {
  auto b = ad::Tensor::full(mu.shape(), hr_bound);
  return ad::div(ad::sub(b, mu), sigma);
}

}  // namespace

OdeHrModel make_ode_hr(ad::ParamStore& ps, const OdeHrSpec& spec) {
  OdeHrModel m;
  m.spec = spec;
  m.bb = make_backbone(ps, "ode", spec.backbone);
  m.demand = nn::Mlp::create(ps, "ode.demand", demand_spec(spec));
  return m;
}

OdeHrModel bind_ode_hr(const ad::ParamStore& ps, const OdeHrSpec& spec) {
  OdeHrModel m;
  m.spec = spec;
  m.bb = bind_backbone(ps, "ode", spec.backbone);
  m.demand = nn::Mlp::bind(ps, "ode.demand", demand_spec(spec));
  return m;
}

ad::Tensor rk4_step(const ad::Tensor& g, const ad::Tensor& d, double dt) {
  auto k1 = ad::sub(d, g);
  auto k2 = ad::sub(d, ad::add(g, ad::mul_scalar(k1, dt / 2.0)));
  auto k3 = ad::sub(d, ad::add(g, ad::mul_scalar(k2, dt / 2.0)));
  auto k4 = ad::sub(d, ad::add(g, ad::mul_scalar(k3, dt)));
  auto sum = ad::add(ad::add(k1, k4), ad::mul_scalar(ad::add(k2, k3), 2.0));
  return ad::add(g, ad::mul_scalar(sum, dt / 6.0));
}

ad::Tensor ode_integrate(const OdeHrModel& m, const ad::Tensor& s_seq,
                         const ad::Tensor& g0, const ad::Tensor& lat_lo,
                         const ad::Tensor& lat_hi, bool training, Rng* rng) {
  const auto B = s_seq.dim(0), T = s_seq.dim(1);
  std::vector<ad::Tensor> steps;
  steps.reserve(static_cast<size_t>(T));
  auto g = ad::clamp(g0, lat_lo, lat_hi);
  steps.push_back(g);
  for (std::int64_t t = 0; t + 1 < T; ++t) {
    auto s_t = ad::select_time(s_seq, static_cast<int>(t));
    auto d = ad::reshape(m.demand.forward(s_t, training, rng), {B});
    g = ad::clamp(rk4_step(g, d, m.spec.dt), lat_lo, lat_hi);
    steps.push_back(g);
  }
  return ad::stack_cols(steps);
}

HrForward ode_hr_forward(const OdeHrModel& m, const ad::Tensor& window,
                         const ad::Tensor& h0,
                         const std::vector<ad::Tensor>* carry, bool training,
                         Rng* rng) {
  auto bb = backbone_forward(m.bb, window, carry, training, rng);
  auto g0 = ad::div(ad::sub(h0, bb.mu), bb.sigma);
  auto lo = latent_bound(bb.mu, bb.sigma, m.spec.hr_min);
  auto hi = latent_bound(bb.mu, bb.sigma, m.spec.hr_max);
  HrForward out;
  out.g = ode_integrate(m, bb.s_seq, g0, lo, hi, training, rng);
  out.h = decode_hr(out.g, bb.mu, bb.sigma);
  out.mu = bb.mu;
  out.sigma = bb.sigma;
  out.gru_carry = std::move(bb.gru_carry);
  return out;
}

}  // namespace physio::hr

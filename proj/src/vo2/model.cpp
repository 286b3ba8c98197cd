#include <cmath>

#include "physio/errors.hpp"
#include "physio/vo2/model.hpp"

namespace physio::vo2 {

namespace ad = physio::ad;

Vo2Spec vo2_preset(const std::string& name) {
  Vo2Spec s;
  if (name == "256-2") {
    s.hidden = 256;
    s.layers = 2;
  } else if (name == "128-4") {
    s.hidden = 128;
    s.layers = 4;
  } else {
    throw ConfigError("unknown vo2 preset: " + name);
  }
  return s;
}

namespace {

nn::MlpSpec mlp_spec(const Vo2Spec& s, int in, int out) {
  nn::MlpSpec m;
  m.widths = {in, s.head_hidden, out};
  m.dropout = s.dropout;
  return m;
}

template <typename MakeMlp, typename MakeGru>
Vo2Model assemble(const Vo2Spec& spec, MakeMlp mlp, MakeGru gru) {
  const int S = 2 * spec.hidden;  // bidirectional state width
  Vo2Model m;
  m.spec = spec;

  nn::MlpSpec enc;
  enc.widths = {spec.input, spec.enc_hidden, spec.enc_hidden};
  enc.dropout = spec.dropout;
  m.encoder = mlp("vo2.enc", enc);

  nn::GruSpec g;
  g.input = spec.enc_hidden;
  g.hidden = spec.hidden;
  g.layers = spec.layers;
  g.bidirectional = true;
  g.dropout = spec.dropout;
  m.gru = gru("vo2.gru", g);

  m.f_q = mlp("vo2.q", mlp_spec(spec, S, 1));
  m.f_r = mlp("vo2.r", mlp_spec(spec, S, 1));
  m.f_init = mlp("vo2.init", mlp_spec(spec, S, 1));
  m.f_p0 = mlp("vo2.p0", mlp_spec(spec, S, 1));
  m.f_mu = mlp("vo2.mu", mlp_spec(spec, S, 1));
  m.f_sigma = mlp("vo2.sigma", mlp_spec(spec, S, 1));
  m.f_delta = mlp("vo2.delta", mlp_spec(spec, S, 1));
  m.f_obs = mlp("vo2.obs", mlp_spec(spec, S, 1));
  m.f_dyn = mlp("vo2.dyn", mlp_spec(spec, 2 * S, 1));
  m.f_direct = mlp("vo2.direct", mlp_spec(spec, S, 1));
  if (spec.learned_schedules) {
    m.f_trend = mlp("vo2.trend", mlp_spec(spec, S, 1));
    m.f_blend = mlp("vo2.blend", mlp_spec(spec, S, 1));
    m.f_dmin = mlp("vo2.dmin", mlp_spec(spec, S, 1));
  }
  return m;
}

ad::Tensor scalar_head(const nn::Mlp& head, const ad::Tensor& x, bool training,
                       Rng* rng) {
  return ad::reshape(head.forward(x, training, rng), {x.dim(0)});
}

}  // namespace

Vo2Model make_vo2(ad::ParamStore& ps, const Vo2Spec& spec) {
  return assemble(
      spec,
      [&](const char* n, nn::MlpSpec s) {
        return nn::Mlp::create(ps, n, std::move(s));
      },
      [&](const char* n, nn::GruSpec s) { return nn::Gru::create(ps, n, s); });
}

Vo2Model bind_vo2(const ad::ParamStore& ps, const Vo2Spec& spec) {
  return assemble(
      spec,
      [&](const char* n, nn::MlpSpec s) {
        return nn::Mlp::bind(ps, n, std::move(s));
      },
      [&](const char* n, nn::GruSpec s) { return nn::Gru::bind(ps, n, s); });
}

Vo2Params predict_params(const Vo2Model& m, const ad::Tensor& s_final,
                         bool training, Rng* rng) {
  const auto& sp = m.spec;
  if (sp.target_sigma <= 0.0)
    throw ContractError("vo2: target_sigma must be positive");
  auto floored = [&](const nn::Mlp& h, double floor) {
    return ad::add_scalar(ad::softplus(scalar_head(h, s_final, training, rng)),
                          floor);
  };
  Vo2Params p;
  p.q = floored(m.f_q, sp.var_floor);
  p.r = floored(m.f_r, sp.var_floor);
  p.y0_init = scalar_head(m.f_init, s_final, training, rng);
  p.p0 = floored(m.f_p0, sp.var_floor);
  p.mu = scalar_head(m.f_mu, s_final, training, rng);
  p.sigma = floored(m.f_sigma, sp.var_floor);
  p.delta_raw = floored(m.f_delta, sp.delta_floor);
  p.delta = ad::mul_scalar(p.delta_raw, 1.0 / sp.target_sigma);
  p.delta_lo = sp.learned_schedules
                   ? ad::mul_scalar(floored(m.f_dmin, sp.delta_floor),
                                    1.0 / sp.target_sigma)
                   : p.delta;
  return p;
}

ad::Tensor measure(const Vo2Model& m, const ad::Tensor& s_t,
                   const ad::Tensor* s_tm1, bool training, Rng* rng) {
  auto z = scalar_head(m.f_obs, s_t, training, rng);
  if (!s_tm1) return z;
  auto gamma = ad::sigmoid(scalar_head(
      m.f_dyn, ad::concat_cols({s_t, *s_tm1}), training, rng));
  return ad::mul(z, gamma);
}

ad::Tensor trend_predict(const Vo2State& s, const ad::Tensor& trend_w) {
  if (s.t == 0) return s.y_hat;
  return ad::add(s.y_hat, ad::mul(trend_w, ad::sub(s.y_hat, s.y_prev)));
}

Vo2StepOut kalman_vo2_step(const Vo2State& s, const ad::Tensor& z,
                           const Vo2Params& pr, const ad::Tensor& trend_w,
                           double eps) {
  Vo2StepOut o;
  o.y_pred = trend_predict(s, trend_w);
  o.p_pre = ad::add(s.p, pr.q);
  o.k = ad::div(o.p_pre, ad::add_scalar(ad::add(o.p_pre, pr.r), eps));
  auto nu = ad::sub(z, o.y_pred);
  o.nu_c = ad::clamp(nu, ad::neg(pr.delta_lo), pr.delta);
  o.y_kf = ad::add(o.y_pred, ad::mul(o.k, o.nu_c));
  o.p = ad::mul(ad::add_scalar(ad::neg(o.k), 1.0), o.p_pre);
  return o;
}

double blend_alpha(int t, double scale, int horizon) {
  if (t >= horizon) return 0.0;
  return scale * (1.0 - static_cast<double>(t) / horizon);
}

namespace {

void trace_step(Vo2Trace& tr, const Vo2StepOut& step, const Vo2Params& pr) {
  auto append = [](std::vector<double>& dst, const ad::Tensor& t) {
    const auto& v = t.values();
    dst.insert(dst.end(), v.begin(), v.end());
  };
  append(tr.k, step.k);
  append(tr.p_pre, step.p_pre);
  append(tr.p_post, step.p);
  append(tr.nu_c, step.nu_c);
  append(tr.delta, pr.delta);
  append(tr.y_kf, step.y_kf);
  const auto& kf = step.y_kf.values();
  const auto& yp = step.y_pred.values();
  for (size_t i = 0; i < kf.size(); ++i)
    tr.correction.push_back(std::abs(kf[i] - yp[i]));
}

}  // namespace

Vo2Output vo2_forward(const Vo2Model& m, const ad::Tensor& window,
                      const ad::Tensor* y0_true, bool training, Rng* rng,
                      Vo2Trace* trace) {
  if (window.ndim() != 3)
    throw ShapeError("vo2 forward: window must be [B x T x D]");
  const int B = window.dim(0), T = window.dim(1), D = window.dim(2);
  if (T < 2)
    throw DataError("vo2 forward: window must span at least two seconds");
  if (y0_true && y0_true->shape() != ad::Shape{B})
    throw ShapeError("vo2 forward: y0 must be [B]");

  auto flat = ad::reshape(window, {B * T, D});
  auto enc = m.encoder.forward(flat, training, rng);
  auto out = m.gru.forward(ad::reshape(enc, {B, T, m.spec.enc_hidden}),
                           nullptr, training, rng);
  auto pr = predict_params(m, out.final, training, rng);

  auto trend_w =
      m.spec.learned_schedules
          ? ad::sigmoid(scalar_head(m.f_trend, out.final, training, rng))
          : ad::Tensor::full({B}, m.spec.trend_weight);

  Vo2State st;
  st.y_hat = y0_true ? *y0_true : pr.y0_init;
  st.y_prev = st.y_hat;
  st.p = pr.p0;
  st.t = 0;

  std::vector<ad::Tensor> ys;
  ys.reserve(static_cast<size_t>(T));
  ys.push_back(st.y_hat);

  for (int t = 1; t < T; ++t) {
    auto s_t = ad::select_time(out.states, t);
    auto s_tm1 = ad::select_time(out.states, t - 1);
    auto z = measure(m, s_t, &s_tm1, training, rng);
    auto step = kalman_vo2_step(st, z, pr, trend_w, m.spec.eps);

    // alpha hits exactly 0 at the horizon; the pure filter estimate passes
    // through untouched from there on
    const double alpha =
        blend_alpha(t, m.spec.blend_scale, m.spec.blend_horizon);
    ad::Tensor y_t;
    if (alpha == 0.0) {
      y_t = step.y_kf;
    } else {
      auto y_dir = scalar_head(m.f_direct, s_t, training, rng);
      if (m.spec.learned_schedules) {
        auto a = ad::mul_scalar(
            ad::sigmoid(scalar_head(m.f_blend, s_t, training, rng)), alpha);
        y_t = ad::add(ad::mul(ad::add_scalar(ad::neg(a), 1.0), step.y_kf),
                      ad::mul(a, y_dir));
      } else {
        y_t = ad::add(ad::mul_scalar(step.y_kf, 1.0 - alpha),
                      ad::mul_scalar(y_dir, alpha));
      }
    }

    if (trace) trace_step(*trace, step, pr);
    st.y_prev = st.y_hat;
    st.y_hat = y_t;
    st.p = step.p;
    st.t = t;
    ys.push_back(y_t);
  }

  Vo2Output o;
  o.y_seq = ad::stack_cols(ys);
  o.mu = pr.mu;
  o.sigma = pr.sigma;
  o.delta_raw = pr.delta_raw;
  return o;
}

}  // namespace physio::vo2

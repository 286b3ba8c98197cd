#include "physio/errors.hpp"
#include "physio/hr/models.hpp"

namespace physio::hr {

namespace ad = physio::ad;

BackboneSpec backbone_preset(const std::string& name) {
  BackboneSpec s;
  if (name == "large") {
    s.enc_hidden = 128;
    s.hidden = 128;
    s.gru_layers = 2;
  } else if (name == "small") {
    s.enc_hidden = 64;
    s.hidden = 64;
    s.gru_layers = 3;
  } else {
    throw ConfigError("unknown backbone preset: " + name);
  }
  return s;
}

namespace {

nn::MlpSpec encoder_spec(const BackboneSpec& s) {
  nn::MlpSpec m;
  m.widths = {s.input, s.enc_hidden, s.enc_hidden};
  m.dropout = s.dropout;
  return m;
}

nn::GruSpec gru_spec(const BackboneSpec& s) {
  nn::GruSpec g;
  g.input = s.enc_hidden;
  g.hidden = s.hidden;
  g.layers = s.gru_layers;
  g.dropout = s.dropout;
  return g;
}

nn::MlpSpec head_spec(const BackboneSpec& s, nn::MlpSpec::Out out) {
  nn::MlpSpec m;
  m.widths = {s.hidden, s.head_hidden, 1};
  m.out = out;
  return m;
}

template <typename MakeMlp, typename MakeGru>
Backbone assemble(const BackboneSpec& spec, MakeMlp mlp, MakeGru gru) {
  Backbone bb;
  bb.spec = spec;
  bb.encoder = mlp("enc", encoder_spec(spec));
  bb.gru = gru("gru", gru_spec(spec));
  bb.mu_head = mlp("mu", head_spec(spec, nn::MlpSpec::Out::identity));
  bb.sigma_head = mlp("sigma", head_spec(spec, nn::MlpSpec::Out::softplus));
  return bb;
}

}  // namespace

Backbone make_backbone(ad::ParamStore& ps, const std::string& prefix,
                       const BackboneSpec& spec) {
  return assemble(
      spec,
      [&](const char* n, nn::MlpSpec s) {
        return nn::Mlp::create(ps, prefix + "." + n, std::move(s));
      },
      [&](const char* n, nn::GruSpec s) {
        return nn::Gru::create(ps, prefix + "." + n, s);
      });
}

Backbone bind_backbone(const ad::ParamStore& ps, const std::string& prefix,
                       const BackboneSpec& spec) {
  return assemble(
      spec,
      [&](const char* n, nn::MlpSpec s) {
        return nn::Mlp::bind(ps, prefix + "." + n, std::move(s));
      },
      [&](const char* n, nn::GruSpec s) {
        return nn::Gru::bind(ps, prefix + "." + n, s);
      });
}

BackboneOut backbone_forward(const Backbone& bb, const ad::Tensor& window,
                             const std::vector<ad::Tensor>* carry,
                             bool training, Rng* rng) {
  if (window.ndim() != 3)
    throw ShapeError("backbone_forward: window must be [B x T x D]");
  const auto B = window.dim(0), T = window.dim(1), D = window.dim(2);
  auto flat = ad::reshape(window, {B * T, D});
  auto enc = bb.encoder.forward(flat, training, rng);
  auto enc_seq = ad::reshape(enc, {B, T, bb.spec.enc_hidden});
  auto out = bb.gru.forward(enc_seq, carry, training, rng);

  BackboneOut r;
  r.s_seq = out.states;
  r.s_final = out.final;
  r.gru_carry = std::move(out.layer_carry);
  r.mu = ad::reshape(bb.mu_head.forward(out.final, training, rng), {B});
  auto sg = bb.sigma_head.forward(out.final, training, rng);
  r.sigma = ad::add_scalar(ad::reshape(sg, {B}), 1e-3);
  return r;
}

ad::Tensor decode_hr(const ad::Tensor& g_seq, const ad::Tensor& mu,
                     const ad::Tensor& sigma) {
  return ad::add_colvec(ad::mul_colvec(g_seq, sigma), mu);
}

}  // namespace physio::hr

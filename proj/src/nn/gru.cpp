#include "physio/nn/gru.hpp"

#include <cmath>

#include "physio/errors.hpp"

namespace physio::nn {

using ad::Tensor;

static void check_spec(const GruSpec& spec) {
  if (spec.input <= 0 || spec.hidden <= 0 || spec.layers <= 0)
    throw ContractError("gru: input, hidden and layers must be positive");
}

static Gru::Dir create_dir(ad::ParamStore& ps, const std::string& prefix,
                           int in, int hidden) {
  const double bx = 1.0 / std::sqrt(static_cast<double>(in));
  const double bh = 1.0 / std::sqrt(static_cast<double>(hidden));
  Gru::Dir d;
  d.wx = ps.create(prefix + ".wx", {in, 3 * hidden}, bx);
  d.wh = ps.create(prefix + ".wh", {hidden, 3 * hidden}, bh);
  d.bx = ps.create(prefix + ".bx", {3 * hidden}, bx);
  d.bh = ps.create(prefix + ".bh", {3 * hidden}, bh);
  return d;
}

static Gru::Dir bind_dir(const ad::ParamStore& ps, const std::string& prefix) {
  Gru::Dir d;
  d.wx = ps.get(prefix + ".wx");
  d.wh = ps.get(prefix + ".wh");
  d.bx = ps.get(prefix + ".bx");
  d.bh = ps.get(prefix + ".bh");
  return d;
}

Gru Gru::create(ad::ParamStore& ps, const std::string& prefix, GruSpec spec) {
  check_spec(spec);
  Gru g;
  g.spec = spec;
  const int dirs_width = spec.bidirectional ? 2 * spec.hidden : spec.hidden;
  for (int l = 0; l < spec.layers; ++l) {
    const int in = l == 0 ? spec.input : dirs_width;
    const std::string lp = prefix + ".l" + std::to_string(l);
    g.fwd.push_back(create_dir(ps, lp + ".f", in, spec.hidden));
    if (spec.bidirectional)
      g.bwd.push_back(create_dir(ps, lp + ".b", in, spec.hidden));
  }
  return g;
}

Gru Gru::bind(const ad::ParamStore& ps, const std::string& prefix,
              GruSpec spec) {
  check_spec(spec);
  Gru g;
  g.spec = spec;
  for (int l = 0; l < spec.layers; ++l) {
    const std::string lp = prefix + ".l" + std::to_string(l);
    g.fwd.push_back(bind_dir(ps, lp + ".f"));
    if (spec.bidirectional) g.bwd.push_back(bind_dir(ps, lp + ".b"));
  }
  return g;
}

// One direction over one layer; states come back indexed by original t.
static std::vector<Tensor> run_dir(const Gru::Dir& d, const Tensor& x_btd,
                                   bool reverse, const Tensor* h0, int hidden) {
  const int b = x_btd.dim(0), t_len = x_btd.dim(1), din = x_btd.dim(2);
  const int h3 = 3 * hidden;
  Tensor flat = ad::reshape(x_btd, {b * t_len, din});
  Tensor gx = ad::reshape(ad::add_rowvec(ad::matmul(flat, d.wx), d.bx),
                          {b, t_len, h3});
  Tensor h = h0 ? *h0 : Tensor::zeros({b, hidden});
  std::vector<Tensor> states(static_cast<size_t>(t_len));
  for (int i = 0; i < t_len; ++i) {
    const int t = reverse ? t_len - 1 - i : i;
    Tensor gxt = ad::select_time(gx, t);
    Tensor gh = ad::add_rowvec(ad::matmul(h, d.wh), d.bh);
    Tensor r = ad::sigmoid(ad::add(ad::slice_cols(gxt, 0, hidden),
                                   ad::slice_cols(gh, 0, hidden)));
    Tensor z = ad::sigmoid(ad::add(ad::slice_cols(gxt, hidden, hidden),
                                   ad::slice_cols(gh, hidden, hidden)));
    Tensor n = ad::tanh_t(ad::add(ad::slice_cols(gxt, 2 * hidden, hidden),
                                  ad::mul(r, ad::slice_cols(gh, 2 * hidden, hidden))));
    // h' = n + z*(h - n)
    h = ad::add(n, ad::mul(z, ad::sub(h, n)));
    states[static_cast<size_t>(t)] = h;
  }
  return states;
}

GruOut Gru::forward(const Tensor& x, const std::vector<Tensor>* carry,
                    bool training, Rng* rng) const {
  if (x.ndim() != 3 || x.dim(2) != spec.input)
    throw ShapeError("gru: input " + ad::shape_str(x.shape()) +
                     " does not match expected [B,T," +
                     std::to_string(spec.input) + "]");
  if (carry) {
    if (spec.bidirectional)
      throw ContractError("gru: carry is only defined for unidirectional stacks");
    if (static_cast<int>(carry->size()) != spec.layers)
      throw ContractError("gru: carry must hold one state per layer");
  }
  const int b = x.dim(0), t_len = x.dim(1);

  GruOut out;
  Tensor layer_in = x;
  std::vector<Tensor> last_fwd, last_bwd;
  for (int l = 0; l < spec.layers; ++l) {
    const Tensor* h0 = carry ? &(*carry)[static_cast<size_t>(l)] : nullptr;
    if (h0 && (h0->ndim() != 2 || h0->dim(0) != b || h0->dim(1) != spec.hidden))
      throw ShapeError("gru: carry state " + ad::shape_str(h0->shape()) +
                       " does not match [B," + std::to_string(spec.hidden) + "]");
    last_fwd = run_dir(fwd[static_cast<size_t>(l)], layer_in, false, h0, spec.hidden);
    std::vector<Tensor> step_out;
    step_out.reserve(static_cast<size_t>(t_len));
    if (spec.bidirectional) {
      last_bwd = run_dir(bwd[static_cast<size_t>(l)], layer_in, true, nullptr,
                         spec.hidden);
      for (int t = 0; t < t_len; ++t)
        step_out.push_back(ad::concat_cols(
            {last_fwd[static_cast<size_t>(t)], last_bwd[static_cast<size_t>(t)]}));
    } else {
      step_out = last_fwd;
    }
    out.layer_carry.push_back(last_fwd[static_cast<size_t>(t_len - 1)]);
    layer_in = ad::stack_steps(step_out);
    if (l + 1 < spec.layers)
      layer_in = ad::dropout(layer_in, spec.dropout, training, rng);
  }
  out.states = layer_in;
  out.final = spec.bidirectional
                  ? ad::concat_cols({last_fwd[static_cast<size_t>(t_len - 1)],
                                     last_bwd[0]})
                  : last_fwd[static_cast<size_t>(t_len - 1)];
  return out;
}

}  // namespace physio::nn

#include "physio/nn/mlp.hpp"

#include <cmath>

#include "physio/errors.hpp"

namespace physio::nn {

using ad::Tensor;

static void check_spec(const MlpSpec& spec) {
  if (spec.widths.size() < 2)
    throw ContractError("mlp: widths must list input and output");
  for (int wdt : spec.widths)
    if (wdt <= 0) throw ContractError("mlp: non-positive layer width");
}

Mlp Mlp::create(ad::ParamStore& ps, const std::string& prefix, MlpSpec spec) {
  check_spec(spec);
  Mlp m;
  m.spec = std::move(spec);
  const auto& widths = m.spec.widths;
  for (size_t l = 0; l + 1 < widths.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(widths[l]));
    const std::string li = std::to_string(l);
    m.w.push_back(ps.create(prefix + ".w" + li, {widths[l], widths[l + 1]}, bound));
    m.b.push_back(ps.create(prefix + ".b" + li, {widths[l + 1]}, bound));
  }
  return m;
}

Mlp Mlp::bind(const ad::ParamStore& ps, const std::string& prefix,
              MlpSpec spec) {
  check_spec(spec);
  Mlp m;
  m.spec = std::move(spec);
  const auto& widths = m.spec.widths;
  for (size_t l = 0; l + 1 < widths.size(); ++l) {
    const std::string li = std::to_string(l);
    m.w.push_back(ps.get(prefix + ".w" + li));
    m.b.push_back(ps.get(prefix + ".b" + li));
    if (m.w.back().shape() != ad::Shape{widths[l], widths[l + 1]})
      throw ContractError("mlp: bound weight " + prefix + ".w" + li +
                          " does not match spec widths");
  }
  return m;
}

Tensor Mlp::forward(const Tensor& x, bool training, Rng* rng) const {
  if (x.ndim() != 2 || x.dim(1) != spec.widths.front())
    throw ShapeError("mlp: input " + ad::shape_str(x.shape()) +
                     " does not match expected [*," +
                     std::to_string(spec.widths.front()) + "]");
  Tensor h = x;
  const size_t layers = w.size();
  for (size_t l = 0; l < layers; ++l) {
    h = ad::add_rowvec(ad::matmul(h, w[l]), b[l]);
    if (l + 1 < layers) {
      h = ad::leaky_relu(h, spec.leaky_slope);
      h = ad::dropout(h, spec.dropout, training, rng);
    }
  }
  switch (spec.out) {
    case MlpSpec::Out::identity:
      return h;
    case MlpSpec::Out::softplus:
      return ad::softplus(h);
    case MlpSpec::Out::sigmoid:
      return ad::sigmoid(h);
  }
  throw ContractError("mlp: unknown output transform");
}

}  // namespace physio::nn

#include "physio/train/optim.hpp"

#include <cmath>

namespace physio::train {

void Adam::step() {
  for (const auto& [path, param] : ps_->items()) {
    if (!param.has_grad()) continue;
    ad::Tensor p = param;  // handle copy, same node
    auto& slot = slots_[path];
    const auto n = p.numel();
    if (slot.m.empty()) {
      slot.m.assign(n, 0.0);
      slot.v.assign(n, 0.0);
    }
    slot.t += 1;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(slot.t));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(slot.t));
    const auto& grad = p.grad();
    auto& w = p.mutable_values();
    for (std::int64_t i = 0; i < n; ++i) {
      double g = grad[i];
      if (!cfg_.decoupled) g += cfg_.weight_decay * w[i];
      slot.m[i] = cfg_.beta1 * slot.m[i] + (1.0 - cfg_.beta1) * g;
      slot.v[i] = cfg_.beta2 * slot.v[i] + (1.0 - cfg_.beta2) * g * g;
      const double m_hat = slot.m[i] / bc1;
      const double v_hat = slot.v[i] / bc2;
      if (cfg_.decoupled) w[i] -= cfg_.lr * cfg_.weight_decay * w[i];
      w[i] -= cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
    }
  }
}

double global_grad_norm(const ad::ParamStore& ps) {
  double ss = 0.0;
  for (const auto& [_, param] : ps.items()) {
    if (!param.has_grad()) continue;
    for (double g : param.grad()) ss += g * g;
  }
  return std::sqrt(ss);
}

double clip_grad_norm(ad::ParamStore& ps, double max_norm) {
  const double norm = global_grad_norm(ps);
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (const auto& [_, param] : ps.items()) {
      if (!param.has_grad()) continue;
      for (double& g : param.node()->grad) g *= scale;
    }
  }
  return norm;
}

}  // namespace physio::train

#include "physio/ad/param_store.hpp"

#include "physio/errors.hpp"

namespace physio::ad {

Tensor ParamStore::create(const std::string& path, Shape shape, double bound) {
  if (has(path))
    throw ContractError("ParamStore::create: duplicate path " + path);
  const auto n = shape_numel(shape);
  std::vector<double> v(static_cast<size_t>(n));
  for (auto& x : v) x = rng_.uniform(-bound, bound);
  Tensor t = Tensor::from(std::move(shape), std::move(v));
  t.set_requires_grad(true);
  params_.emplace(path, t);
  return t;
}

Tensor ParamStore::create_const(const std::string& path, Shape shape,
                                double value) {
  if (has(path))
    throw ContractError("ParamStore::create: duplicate path " + path);
  Tensor t = Tensor::full(std::move(shape), value);
  t.set_requires_grad(true);
  params_.emplace(path, t);
  return t;
}

Tensor ParamStore::get(const std::string& path) const {
  auto it = params_.find(path);
  if (it == params_.end())
    throw ContractError("ParamStore::get: unknown path " + path);
  return it->second;
}

std::int64_t ParamStore::total_values() const {
  std::int64_t n = 0;
  for (const auto& [_, t] : params_) n += t.numel();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& [_, t] : params_) t.zero_grad();
}

void ParamStore::set_values(const std::string& path,
                            const std::vector<double>& values) {
  auto it = params_.find(path);
  if (it == params_.end())
    throw DataError("params: unexpected entry " + path);
  Tensor& t = it->second;
  if (static_cast<std::int64_t>(values.size()) != t.numel())
    throw DataError("params: " + path + " data length mismatch");
  t.mutable_values() = values;
}

}  // namespace physio::ad

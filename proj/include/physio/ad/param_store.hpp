#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "physio/ad/tensor.hpp"
#include "physio/rng.hpp"

namespace physio::ad {

// Named parameter tree. Creation order is fixed by the model constructors,
// so a given seed always produces the same initial values.
class ParamStore {
 public:
  explicit ParamStore(std::uint64_t seed) : rng_(seed) {}

  // uniform init in [-bound, bound]
  Tensor create(const std::string& path, Shape shape, double bound);
  Tensor create_const(const std::string& path, Shape shape, double v);

  bool has(const std::string& path) const { return params_.count(path) != 0; }
  Tensor get(const std::string& path) const;

  const std::map<std::string, Tensor>& items() const { return params_; }
  std::int64_t total_values() const;

  void zero_grad();

  // overwrites one parameter's values in place; shape must already match
  void set_values(const std::string& path, const std::vector<double>& values);

 private:
  std::map<std::string, Tensor> params_;
  Rng rng_;
};

}  // namespace physio::ad

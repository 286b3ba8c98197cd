#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace physio::ad {

using Shape = std::vector<int>;

std::string shape_str(const Shape& s);
std::int64_t shape_numel(const Shape& s);

// One tape entry. Nodes are created in topological order (monotone ids), so
// reverse-id order is a valid backward schedule.
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;
  std::uint64_t id = 0;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backprop;

  double* grad_data();  // zero-initialised on first use
};

// Value-semantic handle onto a shared node.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double v);
  static Tensor from(Shape shape, std::vector<double> values);
  static Tensor scalar(double v);
  static Tensor wrap(std::shared_ptr<Node> n);

  bool defined() const { return n_ != nullptr; }
  const Shape& shape() const;
  int ndim() const;
  int dim(int i) const;
  std::int64_t numel() const;

  const std::vector<double>& values() const;
  std::vector<double>& mutable_values();  // leaves only
  double item() const;                    // scalar tensors only
  double at(std::int64_t i) const;

  bool requires_grad() const;
  Tensor& set_requires_grad(bool rg);
  bool has_grad() const;
  const std::vector<double>& grad() const;
  void zero_grad();
  Tensor detach() const;

  std::shared_ptr<Node> node() const { return n_; }

 private:
  std::shared_ptr<Node> n_;
};

// Reverse-mode sweep from a scalar loss. Grads accumulate: run zero_grad on
// the parameters between steps, not between losses you want summed.
void backward(const Tensor& loss);

// Op-library plumbing: allocate a node wired to parents. Parent edges and
// requires_grad are dropped while grads are disabled.
std::shared_ptr<Node> alloc_node(Shape shape, const std::vector<Tensor>& parents);

// While disabled, ops compute values but record no tape.
bool grad_enabled();
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

}  // namespace physio::ad

#include "physio/ad/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <unordered_set>

#include "physio/errors.hpp"

namespace physio::ad {

namespace {
std::atomic<std::uint64_t> g_next_id{1};
thread_local bool g_grad_enabled = true;
}  // namespace

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

std::int64_t shape_numel(const Shape& s) {
  std::int64_t n = 1;
  for (int d : s) n *= d;
  return n;
}

double* Node::grad_data() {
  if (grad.empty()) grad.assign(value.size(), 0.0);
  return grad.data();
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  auto n = std::make_shared<Node>();
  n->value.assign(static_cast<size_t>(shape_numel(shape)), 0.0);
  n->shape = std::move(shape);
  n->requires_grad = requires_grad;
  n->id = g_next_id.fetch_add(1);
  return wrap(std::move(n));
}

Tensor Tensor::full(Shape shape, double v) {
  Tensor t = zeros(std::move(shape));
  std::fill(t.n_->value.begin(), t.n_->value.end(), v);
  return t;
}

Tensor Tensor::from(Shape shape, std::vector<double> values) {
  if (shape_numel(shape) != static_cast<std::int64_t>(values.size()))
    throw ShapeError("Tensor::from: " + std::to_string(values.size()) +
                     " values for shape " + shape_str(shape));
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(values);
  n->id = g_next_id.fetch_add(1);
  return wrap(std::move(n));
}

Tensor Tensor::scalar(double v) { return from({1}, {v}); }

Tensor Tensor::wrap(std::shared_ptr<Node> n) {
  Tensor t;
  t.n_ = std::move(n);
  return t;
}

static const Node& deref(const std::shared_ptr<Node>& n) {
  if (!n) throw ContractError("use of undefined tensor");
  return *n;
}

const Shape& Tensor::shape() const { return deref(n_).shape; }
int Tensor::ndim() const { return static_cast<int>(deref(n_).shape.size()); }

int Tensor::dim(int i) const {
  const auto& s = deref(n_).shape;
  if (i < 0 || i >= static_cast<int>(s.size()))
    throw ContractError("Tensor::dim: axis " + std::to_string(i) +
                        " out of range for " + shape_str(s));
  return s[i];
}

std::int64_t Tensor::numel() const { return shape_numel(deref(n_).shape); }

const std::vector<double>& Tensor::values() const { return deref(n_).value; }

std::vector<double>& Tensor::mutable_values() {
  deref(n_);
  if (!n_->parents.empty())
    throw ContractError("mutable_values: tensor is not a leaf");
  return n_->value;
}

double Tensor::item() const {
  if (numel() != 1)
    throw ContractError("item: tensor has shape " + shape_str(shape()));
  return n_->value[0];
}

double Tensor::at(std::int64_t i) const { return deref(n_).value.at(i); }

bool Tensor::requires_grad() const { return deref(n_).requires_grad; }

Tensor& Tensor::set_requires_grad(bool rg) {
  deref(n_);
  n_->requires_grad = rg;
  return *this;
}

bool Tensor::has_grad() const { return !deref(n_).grad.empty(); }

const std::vector<double>& Tensor::grad() const {
  if (!has_grad())
    throw ContractError("grad: no gradient has been accumulated");
  return n_->grad;
}

void Tensor::zero_grad() {
  deref(n_);
  n_->grad.clear();
}

Tensor Tensor::detach() const {
  deref(n_);
  Tensor t = Tensor::from(n_->shape, n_->value);
  return t;
}

std::shared_ptr<Node> alloc_node(Shape shape, const std::vector<Tensor>& parents) {
  auto n = std::make_shared<Node>();
  n->value.assign(static_cast<size_t>(shape_numel(shape)), 0.0);
  n->shape = std::move(shape);
  n->id = g_next_id.fetch_add(1);
  if (g_grad_enabled) {
    bool rg = false;
    for (const auto& p : parents) rg = rg || p.requires_grad();
    if (rg) {
      n->requires_grad = true;
      n->parents.reserve(parents.size());
      for (const auto& p : parents) n->parents.push_back(p.node());
    }
  }
  return n;
}

void backward(const Tensor& loss) {
  if (!loss.defined()) throw ContractError("backward: undefined loss");
  if (loss.numel() != 1)
    throw ContractError("backward: loss must be scalar, got shape " +
                        shape_str(loss.shape()));
  auto root = loss.node();
  if (!root->requires_grad) return;  // nothing reachable wants gradients

  // collect the reachable grad-requiring subgraph
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<Node*> stack{root.get()};
  seen.insert(root.get());
  while (!stack.empty()) {
    Node* n = stack.back();
    stack.pop_back();
    order.push_back(n);
    for (const auto& p : n->parents) {
      if (p->requires_grad && seen.insert(p.get()).second)
        stack.push_back(p.get());
    }
  }
  std::sort(order.begin(), order.end(),
            [](const Node* a, const Node* b) { return a->id > b->id; });

  root->grad_data()[0] += 1.0;
  for (Node* n : order) {
    if (n->backprop && !n->grad.empty()) n->backprop(*n);
  }
}

}  // namespace physio::ad

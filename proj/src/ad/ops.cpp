#include "physio/ad/ops.hpp"

#include <cmath>
#include <cstring>

#include "physio/errors.hpp"
#include "physio/kernels/kernels.hpp"

namespace physio::ad {

namespace {

const kernels::Ops& K() { return kernels::active(); }

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

void check_2d(const char* op, const Tensor& a) {
  if (a.ndim() != 2)
    throw ShapeError(std::string(op) + ": expected 2-D tensor, got " +
                     shape_str(a.shape()));
}

int n_of(const Node& n) { return static_cast<int>(n.value.size()); }

// out_grad -> parent, unweighted
void acc(Node& p, const std::vector<double>& g) {
  if (!p.requires_grad) return;
  K().axpy(1.0, g.data(), p.grad_data(), static_cast<int>(g.size()));
}

using Unary = double (*)(double);

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape("add", a, b);
  auto n = alloc_node(a.shape(), {a, b});
  K().add(a.values().data(), b.values().data(), n->value.data(), n_of(*n));
  if (n->requires_grad)
    n->backprop = [](Node& self) {
      acc(*self.parents[0], self.grad);
      acc(*self.parents[1], self.grad);
    };
  return Tensor::wrap(n);
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape("sub", a, b);
  auto n = alloc_node(a.shape(), {a, b});
  K().sub(a.values().data(), b.values().data(), n->value.data(), n_of(*n));
  if (n->requires_grad)
    n->backprop = [](Node& self) {
      acc(*self.parents[0], self.grad);
      Node& b_ = *self.parents[1];
      if (b_.requires_grad)
        K().axpy(-1.0, self.grad.data(), b_.grad_data(),
                 static_cast<int>(self.grad.size()));
    };
  return Tensor::wrap(n);
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape("mul", a, b);
  auto n = alloc_node(a.shape(), {a, b});
  K().mul(a.values().data(), b.values().data(), n->value.data(), n_of(*n));
  if (n->requires_grad)
    n->backprop = [](Node& self) {
      Node& a_ = *self.parents[0];
      Node& b_ = *self.parents[1];
      const int m = static_cast<int>(self.grad.size());
      if (a_.requires_grad) {
        double* ga = a_.grad_data();
        for (int i = 0; i < m; ++i) ga[i] += self.grad[i] * b_.value[i];
      }
      if (b_.requires_grad) {
        double* gb = b_.grad_data();
        for (int i = 0; i < m; ++i) gb[i] += self.grad[i] * a_.value[i];
      }
    };
  return Tensor::wrap(n);
}

Tensor div(const Tensor& a, const Tensor& b) {
  check_same_shape("div", a, b);
  auto n = alloc_node(a.shape(), {a, b});
  for (int i = 0; i < n_of(*n); ++i) n->value[i] = a.at(i) / b.at(i);
  if (n->requires_grad)
    n->backprop = [](Node& self) {
      Node& a_ = *self.parents[0];
      Node& b_ = *self.parents[1];
      const int m = static_cast<int>(self.grad.size());
      if (a_.requires_grad) {
        double* ga = a_.grad_data();
        for (int i = 0; i < m; ++i) ga[i] += self.grad[i] / b_.value[i];
      }
      if (b_.requires_grad) {
        double* gb = b_.grad_data();
        for (int i = 0; i < m; ++i)
          gb[i] -= self.grad[i] * a_.value[i] / (b_.value[i] * b_.value[i]);
      }
    };
  return Tensor::wrap(n);
}

Tensor neg(const Tensor& a) { return mul_scalar(a, -1.0); }

Tensor add_scalar(const Tensor& a, double c) {
  auto n = alloc_node(a.shape(), {a});
  for (int i = 0; i < n_of(*n); ++i) n->value[i] = a.at(i) + c;
  if (n->requires_grad)
    n->backprop = [](Node& self) { acc(*self.parents[0], self.grad); };
  return Tensor::wrap(n);
}

Tensor mul_scalar(const Tensor& a, double c) {
  auto n = alloc_node(a.shape(), {a});
  K().scale(c, a.values().data(), n->value.data(), n_of(*n));
  if (n->requires_grad)
    n->backprop = [c](Node& self) {
      Node& a_ = *self.parents[0];
      if (a_.requires_grad)
        K().axpy(c, self.grad.data(), a_.grad_data(),
                 static_cast<int>(self.grad.size()));
    };
  return Tensor::wrap(n);
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_2d("matmul", a);
  check_2d("matmul", b);
  const int m = a.dim(0), k = a.dim(1), n2 = b.dim(1);
  if (b.dim(0) != k)
    throw ShapeError("matmul: inner dims differ, " + shape_str(a.shape()) +
                     " * " + shape_str(b.shape()));
  auto n = alloc_node({m, n2}, {a, b});
  K().gemm_nn(a.values().data(), b.values().data(), n->value.data(), m, k, n2,
              false);
  if (n->requires_grad)
    n->backprop = [m, k, n2](Node& self) {
      Node& a_ = *self.parents[0];
      Node& b_ = *self.parents[1];
      // dA += G * B^T ; dB += A^T * G
      if (a_.requires_grad)
        K().gemm_nt(self.grad.data(), b_.value.data(), a_.grad_data(), m, n2,
                    k, true);
      if (b_.requires_grad)
        K().gemm_tn(a_.value.data(), self.grad.data(), b_.grad_data(), k, m,
                    n2, true);
    };
  return Tensor::wrap(n);
}

Tensor add_rowvec(const Tensor& m, const Tensor& v) {
  check_2d("add_rowvec", m);
  const int r = m.dim(0), c = m.dim(1);
  if (v.ndim() != 1 || v.dim(0) != c)
    throw ShapeError("add_rowvec: vector " + shape_str(v.shape()) +
                     " does not match columns of " + shape_str(m.shape()));
  auto n = alloc_node(m.shape(), {m, v});
  for (int i = 0; i < r; ++i)
    K().add(m.values().data() + static_cast<size_t>(i) * c, v.values().data(),
            n->value.data() + static_cast<size_t>(i) * c, c);
  if (n->requires_grad)
    n->backprop = [r, c](Node& self) {
      acc(*self.parents[0], self.grad);
      Node& v_ = *self.parents[1];
      if (v_.requires_grad) {
        double* gv = v_.grad_data();
        for (int i = 0; i < r; ++i)
          K().axpy(1.0, self.grad.data() + static_cast<size_t>(i) * c, gv, c);
      }
    };
  return Tensor::wrap(n);
}

Tensor add_colvec(const Tensor& m, const Tensor& v) {
  check_2d("add_colvec", m);
  const int r = m.dim(0), c = m.dim(1);
  if (v.ndim() != 1 || v.dim(0) != r)
    throw ShapeError("add_colvec: vector " + shape_str(v.shape()) +
                     " does not match rows of " + shape_str(m.shape()));
  auto n = alloc_node(m.shape(), {m, v});
  for (int i = 0; i < r; ++i) {
    const double vi = v.at(i);
    for (int j = 0; j < c; ++j)
      n->value[static_cast<size_t>(i) * c + j] =
          m.at(static_cast<size_t>(i) * c + j) + vi;
  }
  if (n->requires_grad)
    n->backprop = [r, c](Node& self) {
      acc(*self.parents[0], self.grad);
      Node& v_ = *self.parents[1];
      if (v_.requires_grad) {
        double* gv = v_.grad_data();
        for (int i = 0; i < r; ++i)
          gv[i] += K().sum(self.grad.data() + static_cast<size_t>(i) * c, c);
      }
    };
  return Tensor::wrap(n);
}

Tensor mul_colvec(const Tensor& m, const Tensor& v) {
  check_2d("mul_colvec", m);
  const int r = m.dim(0), c = m.dim(1);
  if (v.ndim() != 1 || v.dim(0) != r)
    throw ShapeError("mul_colvec: vector " + shape_str(v.shape()) +
                     " does not match rows of " + shape_str(m.shape()));
  auto n = alloc_node(m.shape(), {m, v});
  for (int i = 0; i < r; ++i)
    K().scale(v.at(i), m.values().data() + static_cast<size_t>(i) * c,
              n->value.data() + static_cast<size_t>(i) * c, c);
  if (n->requires_grad)
    n->backprop = [r, c](Node& self) {
      Node& m_ = *self.parents[0];
      Node& v_ = *self.parents[1];
      if (m_.requires_grad) {
        double* gm = m_.grad_data();
        for (int i = 0; i < r; ++i)
          K().axpy(v_.value[i], self.grad.data() + static_cast<size_t>(i) * c,
                   gm + static_cast<size_t>(i) * c, c);
      }
      if (v_.requires_grad) {
        double* gv = v_.grad_data();
        for (int i = 0; i < r; ++i)
          gv[i] += K().dot(self.grad.data() + static_cast<size_t>(i) * c,
                           m_.value.data() + static_cast<size_t>(i) * c, c);
      }
    };
  return Tensor::wrap(n);
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ContractError("concat_cols: no inputs");
  // 1-D parts are treated as single columns
  const int r = parts[0].dim(0);
  int total = 0;
  std::vector<int> widths;
  for (const auto& p : parts) {
    if (p.ndim() > 2)
      throw ShapeError("concat_cols: expected 1-D or 2-D, got " +
                       shape_str(p.shape()));
    if (p.dim(0) != r)
      throw ShapeError("concat_cols: row mismatch " + shape_str(p.shape()) +
                       " vs " + shape_str(parts[0].shape()));
    const int w = p.ndim() == 1 ? 1 : p.dim(1);
    widths.push_back(w);
    total += w;
  }
  auto n = alloc_node({r, total}, parts);
  int off = 0;
  for (size_t pi = 0; pi < parts.size(); ++pi) {
    const int w = widths[pi];
    for (int i = 0; i < r; ++i)
      std::memcpy(n->value.data() + static_cast<size_t>(i) * total + off,
                  parts[pi].values().data() + static_cast<size_t>(i) * w,
                  sizeof(double) * w);
    off += w;
  }
  if (n->requires_grad)
    n->backprop = [widths, r, total](Node& self) {
      int off2 = 0;
      for (size_t pi = 0; pi < self.parents.size(); ++pi) {
        const int w = widths[pi];
        Node& p = *self.parents[pi];
        if (p.requires_grad) {
          double* gp = p.grad_data();
          for (int i = 0; i < r; ++i)
            K().axpy(1.0,
                     self.grad.data() + static_cast<size_t>(i) * total + off2,
                     gp + static_cast<size_t>(i) * w, w);
        }
        off2 += w;
      }
    };
  return Tensor::wrap(n);
}

Tensor slice_cols(const Tensor& a, int start, int len) {
  check_2d("slice_cols", a);
  const int r = a.dim(0), c = a.dim(1);
  if (start < 0 || len <= 0 || start + len > c)
    throw ShapeError("slice_cols: [" + std::to_string(start) + "," +
                     std::to_string(start + len) + ") out of range for " +
                     shape_str(a.shape()));
  auto n = alloc_node({r, len}, {a});
  for (int i = 0; i < r; ++i)
    std::memcpy(n->value.data() + static_cast<size_t>(i) * len,
                a.values().data() + static_cast<size_t>(i) * c + start,
                sizeof(double) * len);
  if (n->requires_grad)
    n->backprop = [r, c, start, len](Node& self) {
      Node& a_ = *self.parents[0];
      if (!a_.requires_grad) return;
      double* ga = a_.grad_data();
      for (int i = 0; i < r; ++i)
        K().axpy(1.0, self.grad.data() + static_cast<size_t>(i) * len,
                 ga + static_cast<size_t>(i) * c + start, len);
    };
  return Tensor::wrap(n);
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_numel(shape) != a.numel())
    throw ShapeError("reshape: cannot view " + shape_str(a.shape()) + " as " +
                     shape_str(shape));
  auto n = alloc_node(std::move(shape), {a});
  n->value = a.values();
  if (n->requires_grad)
    n->backprop = [](Node& self) { acc(*self.parents[0], self.grad); };
  return Tensor::wrap(n);
}

Tensor select_time(const Tensor& btd, int t) {
  if (btd.ndim() != 3)
    throw ShapeError("select_time: expected [B,T,D], got " +
                     shape_str(btd.shape()));
  const int b = btd.dim(0), tt = btd.dim(1), d = btd.dim(2);
  if (t < 0 || t >= tt)
    throw ShapeError("select_time: t=" + std::to_string(t) +
                     " out of range for " + shape_str(btd.shape()));
  auto n = alloc_node({b, d}, {btd});
  for (int i = 0; i < b; ++i)
    std::memcpy(n->value.data() + static_cast<size_t>(i) * d,
                btd.values().data() + (static_cast<size_t>(i) * tt + t) * d,
                sizeof(double) * d);
  if (n->requires_grad)
    n->backprop = [b, tt, d, t](Node& self) {
      Node& a_ = *self.parents[0];
      if (!a_.requires_grad) return;
      double* ga = a_.grad_data();
      for (int i = 0; i < b; ++i)
        K().axpy(1.0, self.grad.data() + static_cast<size_t>(i) * d,
                 ga + (static_cast<size_t>(i) * tt + t) * d, d);
    };
  return Tensor::wrap(n);
}

std::vector<Tensor> split_time(const Tensor& btd) {
  if (btd.ndim() != 3)
    throw ShapeError("split_time: expected [B,T,D], got " +
                     shape_str(btd.shape()));
  std::vector<Tensor> out;
  out.reserve(btd.dim(1));
  for (int t = 0; t < btd.dim(1); ++t) out.push_back(select_time(btd, t));
  return out;
}

Tensor stack_cols(const std::vector<Tensor>& steps) {
  if (steps.empty()) throw ContractError("stack_cols: no inputs");
  const int b = steps[0].dim(0);
  const int t = static_cast<int>(steps.size());
  for (const auto& s : steps)
    if (s.ndim() != 1 || s.dim(0) != b)
      throw ShapeError("stack_cols: expected [B] steps, got " +
                       shape_str(s.shape()));
  auto n = alloc_node({b, t}, steps);
  for (int j = 0; j < t; ++j)
    for (int i = 0; i < b; ++i)
      n->value[static_cast<size_t>(i) * t + j] = steps[j].at(i);
  if (n->requires_grad)
    n->backprop = [b, t](Node& self) {
      for (int j = 0; j < t; ++j) {
        Node& p = *self.parents[j];
        if (!p.requires_grad) continue;
        double* gp = p.grad_data();
        for (int i = 0; i < b; ++i)
          gp[i] += self.grad[static_cast<size_t>(i) * t + j];
      }
    };
  return Tensor::wrap(n);
}

Tensor stack_steps(const std::vector<Tensor>& steps) {
  if (steps.empty()) throw ContractError("stack_steps: no inputs");
  const int b = steps[0].dim(0);
  const int d = steps[0].dim(1);
  const int t = static_cast<int>(steps.size());
  for (const auto& s : steps)
    if (s.ndim() != 2 || s.dim(0) != b || s.dim(1) != d)
      throw ShapeError("stack_steps: expected [B,D] steps, got " +
                       shape_str(s.shape()));
  auto n = alloc_node({b, t, d}, steps);
  for (int j = 0; j < t; ++j)
    for (int i = 0; i < b; ++i)
      std::memcpy(n->value.data() + (static_cast<size_t>(i) * t + j) * d,
                  steps[j].values().data() + static_cast<size_t>(i) * d,
                  sizeof(double) * d);
  if (n->requires_grad)
    n->backprop = [b, t, d](Node& self) {
      for (int j = 0; j < t; ++j) {
        Node& p = *self.parents[j];
        if (!p.requires_grad) continue;
        double* gp = p.grad_data();
        for (int i = 0; i < b; ++i)
          K().axpy(1.0, self.grad.data() + (static_cast<size_t>(i) * t + j) * d,
                   gp + static_cast<size_t>(i) * d, d);
      }
    };
  return Tensor::wrap(n);
}

Tensor sum(const Tensor& a) {
  auto n = alloc_node({1}, {a});
  n->value[0] = K().sum(a.values().data(), static_cast<int>(a.numel()));
  if (n->requires_grad)
    n->backprop = [](Node& self) {
      Node& a_ = *self.parents[0];
      if (!a_.requires_grad) return;
      const double g = self.grad[0];
      double* ga = a_.grad_data();
      for (size_t i = 0; i < a_.value.size(); ++i) ga[i] += g;
    };
  return Tensor::wrap(n);
}

Tensor mean(const Tensor& a) {
  return mul_scalar(sum(a), 1.0 / static_cast<double>(a.numel()));
}

namespace {

template <typename F, typename Dn>
Tensor unary(const Tensor& a, F f, Dn make_back) {
  auto n = alloc_node(a.shape(), {a});
  for (int i = 0; i < n_of(*n); ++i) n->value[i] = f(a.at(i));
  if (n->requires_grad) n->backprop = make_back();
  return Tensor::wrap(n);
}

double sigmoid_v(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus_v(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

}  // namespace

Tensor abs_t(const Tensor& a) {
  return unary(
      a, [](double x) { return std::fabs(x); },
      [] {
        return [](Node& self) {
          Node& a_ = *self.parents[0];
          if (!a_.requires_grad) return;
          double* ga = a_.grad_data();
          for (size_t i = 0; i < self.grad.size(); ++i) {
            const double x = a_.value[i];
            ga[i] += self.grad[i] * (x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0));
          }
        };
      });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      a, sigmoid_v,
      [] {
        return [](Node& self) {
          Node& a_ = *self.parents[0];
          if (!a_.requires_grad) return;
          double* ga = a_.grad_data();
          for (size_t i = 0; i < self.grad.size(); ++i) {
            const double s = self.value[i];
            ga[i] += self.grad[i] * s * (1.0 - s);
          }
        };
      });
}

Tensor tanh_t(const Tensor& a) {
  return unary(
      a, [](double x) { return std::tanh(x); },
      [] {
        return [](Node& self) {
          Node& a_ = *self.parents[0];
          if (!a_.requires_grad) return;
          double* ga = a_.grad_data();
          for (size_t i = 0; i < self.grad.size(); ++i) {
            const double th = self.value[i];
            ga[i] += self.grad[i] * (1.0 - th * th);
          }
        };
      });
}

Tensor softplus(const Tensor& a) {
  return unary(
      a, softplus_v,
      [] {
        return [](Node& self) {
          Node& a_ = *self.parents[0];
          if (!a_.requires_grad) return;
          double* ga = a_.grad_data();
          for (size_t i = 0; i < self.grad.size(); ++i)
            ga[i] += self.grad[i] * sigmoid_v(a_.value[i]);
        };
      });
}

Tensor leaky_relu(const Tensor& a, double slope) {
  auto n = alloc_node(a.shape(), {a});
  for (int i = 0; i < n_of(*n); ++i) {
    const double x = a.at(i);
    n->value[i] = x > 0.0 ? x : slope * x;
  }
  if (n->requires_grad)
    n->backprop = [slope](Node& self) {
      Node& a_ = *self.parents[0];
      if (!a_.requires_grad) return;
      double* ga = a_.grad_data();
      for (size_t i = 0; i < self.grad.size(); ++i)
        ga[i] += self.grad[i] * (a_.value[i] > 0.0 ? 1.0 : slope);
    };
  return Tensor::wrap(n);
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  if (!(lo <= hi))
    throw ContractError("clamp: lo > hi (" + std::to_string(lo) + " > " +
                        std::to_string(hi) + ")");
  auto n = alloc_node(a.shape(), {a});
  for (int i = 0; i < n_of(*n); ++i)
    n->value[i] = std::min(hi, std::max(lo, a.at(i)));
  if (n->requires_grad)
    n->backprop = [lo, hi](Node& self) {
      Node& a_ = *self.parents[0];
      if (!a_.requires_grad) return;
      double* ga = a_.grad_data();
      for (size_t i = 0; i < self.grad.size(); ++i) {
        const double x = a_.value[i];
        if (x >= lo && x <= hi) ga[i] += self.grad[i];
      }
    };
  return Tensor::wrap(n);
}

Tensor clamp(const Tensor& a, const Tensor& lo, const Tensor& hi) {
  check_same_shape("clamp", a, lo);
  check_same_shape("clamp", a, hi);
  auto n = alloc_node(a.shape(), {a, lo, hi});
  for (int i = 0; i < n_of(*n); ++i) {
    if (lo.at(i) > hi.at(i))
      throw ContractError("clamp: lo > hi at element " + std::to_string(i));
    n->value[i] = std::min(hi.at(i), std::max(lo.at(i), a.at(i)));
  }
  if (n->requires_grad)
    n->backprop = [](Node& self) {
      Node& a_ = *self.parents[0];
      Node& lo_ = *self.parents[1];
      Node& hi_ = *self.parents[2];
      double* ga = a_.requires_grad ? a_.grad_data() : nullptr;
      double* gl = lo_.requires_grad ? lo_.grad_data() : nullptr;
      double* gh = hi_.requires_grad ? hi_.grad_data() : nullptr;
      for (size_t i = 0; i < self.grad.size(); ++i) {
        const double x = a_.value[i];
        if (x < lo_.value[i]) {
          if (gl) gl[i] += self.grad[i];
        } else if (x > hi_.value[i]) {
          if (gh) gh[i] += self.grad[i];
        } else {
          if (ga) ga[i] += self.grad[i];
        }
      }
    };
  return Tensor::wrap(n);
}

Tensor dropout(const Tensor& a, double rate, bool training, Rng* rng) {
  if (rate < 0.0 || rate >= 1.0)
    throw ContractError("dropout: rate must be in [0,1), got " +
                        std::to_string(rate));
  if (!training || rate == 0.0) return a;
  if (!rng) throw ContractError("dropout: active dropout needs an rng");
  const double keep = 1.0 - rate;
  std::vector<double> mask(static_cast<size_t>(a.numel()));
  for (auto& m : mask) m = rng->uniform() < keep ? 1.0 / keep : 0.0;
  auto n = alloc_node(a.shape(), {a});
  K().mul(a.values().data(), mask.data(), n->value.data(), n_of(*n));
  if (n->requires_grad)
    n->backprop = [mask = std::move(mask)](Node& self) {
      Node& a_ = *self.parents[0];
      if (!a_.requires_grad) return;
      double* ga = a_.grad_data();
      for (size_t i = 0; i < self.grad.size(); ++i)
        ga[i] += self.grad[i] * mask[i];
    };
  return Tensor::wrap(n);
}

}  // namespace physio::ad

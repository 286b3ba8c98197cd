#pragma once

#include <vector>

#include "physio/ad/tensor.hpp"
#include "physio/rng.hpp"

namespace physio::ad {

// Elementwise, shapes must match exactly.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor neg(const Tensor& a);
Tensor add_scalar(const Tensor& a, double c);
Tensor mul_scalar(const Tensor& a, double c);

// a[m x k] * b[k x n]
Tensor matmul(const Tensor& a, const Tensor& b);

// Broadcasts over a 2-D matrix: rowvec has one entry per column, colvec one
// entry per row.
Tensor add_rowvec(const Tensor& m, const Tensor& v);
Tensor add_colvec(const Tensor& m, const Tensor& v);
Tensor mul_colvec(const Tensor& m, const Tensor& v);

Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor slice_cols(const Tensor& a, int start, int len);
Tensor reshape(const Tensor& a, Shape shape);

// Sequence plumbing for [B x T x D] windows.
Tensor select_time(const Tensor& btd, int t);
std::vector<Tensor> split_time(const Tensor& btd);
Tensor stack_cols(const std::vector<Tensor>& steps);   // T x [B] -> [B x T]
Tensor stack_steps(const std::vector<Tensor>& steps);  // T x [B x D] -> [B x T x D]

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

Tensor abs_t(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor tanh_t(const Tensor& a);
Tensor softplus(const Tensor& a);
Tensor leaky_relu(const Tensor& a, double slope);

// Subgradient convention: pass-through inside [lo, hi] (closed), zero
// outside; a clipped element routes its gradient to the active bound.
Tensor clamp(const Tensor& a, double lo, double hi);
Tensor clamp(const Tensor& a, const Tensor& lo, const Tensor& hi);

// Inverted scaling: kept units are divided by (1 - rate) during training,
// eval mode is the identity (same tensor, no node).
Tensor dropout(const Tensor& a, double rate, bool training, Rng* rng);

}  // namespace physio::ad

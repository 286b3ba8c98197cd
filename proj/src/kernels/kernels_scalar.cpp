#include "physio/kernels/kernels.hpp"

#include <cstring>

namespace physio::kernels {
namespace {

void gemm_nn_s(const double* a, const double* b, double* c, int m, int k,
               int n, bool acc) {
  if (!acc) std::memset(c, 0, sizeof(double) * static_cast<size_t>(m) * n);
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<size_t>(i) * k;
    double* ci = c + static_cast<size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const double av = ai[p];
      const double* bp = b + static_cast<size_t>(p) * n;
      for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

void gemm_nt_s(const double* a, const double* b, double* c, int m, int k,
               int n, bool acc) {
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<size_t>(i) * k;
    double* ci = c + static_cast<size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const double* bj = b + static_cast<size_t>(j) * k;
      double s = 0.0;
      for (int p = 0; p < k; ++p) s += ai[p] * bj[p];
      ci[j] = acc ? ci[j] + s : s;
    }
  }
}

void gemm_tn_s(const double* a, const double* b, double* c, int m, int k,
               int n, bool acc) {
  if (!acc) std::memset(c, 0, sizeof(double) * static_cast<size_t>(m) * n);
  for (int p = 0; p < k; ++p) {
    const double* ap = a + static_cast<size_t>(p) * m;
    const double* bp = b + static_cast<size_t>(p) * n;
    for (int i = 0; i < m; ++i) {
      const double av = ap[i];
      double* ci = c + static_cast<size_t>(i) * n;
      for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

void add_s(const double* a, const double* b, double* out, int n) {
  for (int i = 0; i < n; ++i) out[i] = a[i] + b[i];
}
void sub_s(const double* a, const double* b, double* out, int n) {
  for (int i = 0; i < n; ++i) out[i] = a[i] - b[i];
}
void mul_s(const double* a, const double* b, double* out, int n) {
  for (int i = 0; i < n; ++i) out[i] = a[i] * b[i];
}
void axpy_s(double alpha, const double* x, double* y, int n) {
  for (int i = 0; i < n; ++i) y[i] += alpha * x[i];
}
void scale_s(double alpha, const double* x, double* y, int n) {
  for (int i = 0; i < n; ++i) y[i] = alpha * x[i];
}
double dot_s(const double* a, const double* b, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}
double sum_s(const double* a, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += a[i];
  return s;
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops ops = {
      "scalar",  gemm_nn_s, gemm_nt_s, gemm_tn_s, add_s, sub_s,
      mul_s,     axpy_s,    scale_s,   dot_s,     sum_s,
  };
  return ops;
}

}  // namespace physio::kernels

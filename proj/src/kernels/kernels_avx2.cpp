// AVX2+FMA lane. This TU is the only one compiled with -mavx2 -mfma, so no
// AVX2 instruction can leak into code that runs before the dispatch check.

#include "physio/kernels/kernels.hpp"

#include <immintrin.h>

#include <cstring>

namespace physio::kernels {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

void gemm_nn_v(const double* a, const double* b, double* c, int m, int k,
               int n, bool acc) {
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<size_t>(i) * k;
    double* ci = c + static_cast<size_t>(i) * n;
    int j = 0;
    for (; j + 16 <= n; j += 16) {
      __m256d c0, c1, c2, c3;
      if (acc) {
        c0 = _mm256_loadu_pd(ci + j);
        c1 = _mm256_loadu_pd(ci + j + 4);
        c2 = _mm256_loadu_pd(ci + j + 8);
        c3 = _mm256_loadu_pd(ci + j + 12);
      } else {
        c0 = c1 = c2 = c3 = _mm256_setzero_pd();
      }
      for (int p = 0; p < k; ++p) {
        const __m256d av = _mm256_set1_pd(ai[p]);
        const double* bp = b + static_cast<size_t>(p) * n + j;
        c0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bp), c0);
        c1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bp + 4), c1);
        c2 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bp + 8), c2);
        c3 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bp + 12), c3);
      }
      _mm256_storeu_pd(ci + j, c0);
      _mm256_storeu_pd(ci + j + 4, c1);
      _mm256_storeu_pd(ci + j + 8, c2);
      _mm256_storeu_pd(ci + j + 12, c3);
    }
    for (; j + 4 <= n; j += 4) {
      __m256d c0 = acc ? _mm256_loadu_pd(ci + j) : _mm256_setzero_pd();
      for (int p = 0; p < k; ++p) {
        const __m256d av = _mm256_set1_pd(ai[p]);
        c0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b + static_cast<size_t>(p) * n + j), c0);
      }
      _mm256_storeu_pd(ci + j, c0);
    }
    for (; j < n; ++j) {
      double s = acc ? ci[j] : 0.0;
      for (int p = 0; p < k; ++p) s += ai[p] * b[static_cast<size_t>(p) * n + j];
      ci[j] = s;
    }
  }
}

void gemm_tn_v(const double* a, const double* b, double* c, int m, int k,
               int n, bool acc) {
  for (int i = 0; i < m; ++i) {
    double* ci = c + static_cast<size_t>(i) * n;
    int j = 0;
    for (; j + 16 <= n; j += 16) {
      __m256d c0, c1, c2, c3;
      if (acc) {
        c0 = _mm256_loadu_pd(ci + j);
        c1 = _mm256_loadu_pd(ci + j + 4);
        c2 = _mm256_loadu_pd(ci + j + 8);
        c3 = _mm256_loadu_pd(ci + j + 12);
      } else {
        c0 = c1 = c2 = c3 = _mm256_setzero_pd();
      }
      for (int p = 0; p < k; ++p) {
        const __m256d av = _mm256_set1_pd(a[static_cast<size_t>(p) * m + i]);
        const double* bp = b + static_cast<size_t>(p) * n + j;
        c0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bp), c0);
        c1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bp + 4), c1);
        c2 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bp + 8), c2);
        c3 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bp + 12), c3);
      }
      _mm256_storeu_pd(ci + j, c0);
      _mm256_storeu_pd(ci + j + 4, c1);
      _mm256_storeu_pd(ci + j + 8, c2);
      _mm256_storeu_pd(ci + j + 12, c3);
    }
    for (; j + 4 <= n; j += 4) {
      __m256d c0 = acc ? _mm256_loadu_pd(ci + j) : _mm256_setzero_pd();
      for (int p = 0; p < k; ++p) {
        const __m256d av = _mm256_set1_pd(a[static_cast<size_t>(p) * m + i]);
        c0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b + static_cast<size_t>(p) * n + j), c0);
      }
      _mm256_storeu_pd(ci + j, c0);
    }
    for (; j < n; ++j) {
      double s = acc ? ci[j] : 0.0;
      for (int p = 0; p < k; ++p)
        s += a[static_cast<size_t>(p) * m + i] * b[static_cast<size_t>(p) * n + j];
      ci[j] = s;
    }
  }
}

inline double dot_v(const double* a, const double* b, int n) {
  __m256d s0 = _mm256_setzero_pd();
  __m256d s1 = _mm256_setzero_pd();
  __m256d s2 = _mm256_setzero_pd();
  __m256d s3 = _mm256_setzero_pd();
  int i = 0;
  for (; i + 16 <= n; i += 16) {
    s0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), s0);
    s1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), s1);
    s2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8), s2);
    s3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12), s3);
  }
  for (; i + 4 <= n; i += 4)
    s0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), s0);
  double s = hsum(_mm256_add_pd(_mm256_add_pd(s0, s1), _mm256_add_pd(s2, s3)));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void gemm_nt_v(const double* a, const double* b, double* c, int m, int k,
               int n, bool acc) {
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<size_t>(i) * k;
    double* ci = c + static_cast<size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const double s = dot_v(ai, b + static_cast<size_t>(j) * k, k);
      ci[j] = acc ? ci[j] + s : s;
    }
  }
}

void add_v(const double* a, const double* b, double* out, int n) {
  int i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] + b[i];
}
void sub_v(const double* a, const double* b, double* out, int n) {
  int i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] - b[i];
}
void mul_v(const double* a, const double* b, double* out, int n) {
  int i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}
void axpy_v(double alpha, const double* x, double* y, int n) {
  const __m256d av = _mm256_set1_pd(alpha);
  int i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}
void scale_v(double alpha, const double* x, double* y, int n) {
  const __m256d av = _mm256_set1_pd(alpha);
  int i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_mul_pd(av, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) y[i] = alpha * x[i];
}
double sum_v(const double* a, int n) {
  __m256d s0 = _mm256_setzero_pd();
  __m256d s1 = _mm256_setzero_pd();
  int i = 0;
  for (; i + 8 <= n; i += 8) {
    s0 = _mm256_add_pd(s0, _mm256_loadu_pd(a + i));
    s1 = _mm256_add_pd(s1, _mm256_loadu_pd(a + i + 4));
  }
  for (; i + 4 <= n; i += 4) s0 = _mm256_add_pd(s0, _mm256_loadu_pd(a + i));
  double s = hsum(_mm256_add_pd(s0, s1));
  for (; i < n; ++i) s += a[i];
  return s;
}
double dot_entry(const double* a, const double* b, int n) { return dot_v(a, b, n); }

}  // namespace

const Ops* avx2_impl_table() {
  static const Ops ops = {
      "avx2",  gemm_nn_v, gemm_nt_v, gemm_tn_v, add_v, sub_v,
      mul_v,   axpy_v,    scale_v,   dot_entry, sum_v,
  };
  return &ops;
}

}  // namespace physio::kernels

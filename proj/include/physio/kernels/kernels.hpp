#pragma once

namespace physio::kernels {

// Dense float64 primitives behind the tensor engine. Two implementations:
// a scalar reference and an AVX2+FMA variant, selected once at startup.
// All matrices are row-major. acc=true accumulates into c, else overwrites.
struct Ops {
  const char* name;

  // c[m x n] (+)= a[m x k] * b[k x n]
  void (*gemm_nn)(const double* a, const double* b, double* c, int m, int k,
                  int n, bool acc);
  // c[m x n] (+)= a[m x k] * b[n x k]^T
  void (*gemm_nt)(const double* a, const double* b, double* c, int m, int k,
                  int n, bool acc);
  // c[m x n] (+)= a[k x m]^T * b[k x n]
  void (*gemm_tn)(const double* a, const double* b, double* c, int m, int k,
                  int n, bool acc);

  void (*add)(const double* a, const double* b, double* out, int n);
  void (*sub)(const double* a, const double* b, double* out, int n);
  void (*mul)(const double* a, const double* b, double* out, int n);
  void (*axpy)(double alpha, const double* x, double* y, int n);  // y += a*x
  void (*scale)(double alpha, const double* x, double* y, int n);  // y = a*x
  double (*dot)(const double* a, const double* b, int n);
  double (*sum)(const double* a, int n);
};

const Ops& scalar_ops();

// nullptr when this build or this CPU cannot run AVX2+FMA
const Ops* avx2_ops();

// Chosen once per process: AVX2 when available, else scalar.
// PHYSIO_KERNELS=scalar|avx2 forces a lane (bad value or unavailable lane
// throws ConfigError on first use).
const Ops& active();

}  // namespace physio::kernels

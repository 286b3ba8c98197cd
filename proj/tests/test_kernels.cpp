#include <cmath>
#include <vector>

#include "doctest.h"
#include "physio/kernels/kernels.hpp"
#include "physio/rng.hpp"

using physio::Rng;
using physio::kernels::Ops;

namespace {

std::vector<double> rand_vec(Rng& rng, int n) {
  std::vector<double> v(static_cast<size_t>(n));
  for (auto& x : v) x = rng.uniform(-2.0, 2.0);
  return v;
}

// independent reference: plain triple loop
void naive_nn(const std::vector<double>& a, const std::vector<double>& b,
              std::vector<double>& c, int m, int k, int n, bool acc) {
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      double s = acc ? c[static_cast<size_t>(i) * n + j] : 0.0;
      for (int p = 0; p < k; ++p)
        s += a[static_cast<size_t>(i) * k + p] * b[static_cast<size_t>(p) * n + j];
      c[static_cast<size_t>(i) * n + j] = s;
    }
}

void naive_nt(const std::vector<double>& a, const std::vector<double>& b,
              std::vector<double>& c, int m, int k, int n, bool acc) {
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      double s = acc ? c[static_cast<size_t>(i) * n + j] : 0.0;
      for (int p = 0; p < k; ++p)
        s += a[static_cast<size_t>(i) * k + p] * b[static_cast<size_t>(j) * k + p];
      c[static_cast<size_t>(i) * n + j] = s;
    }
}

void naive_tn(const std::vector<double>& a, const std::vector<double>& b,
              std::vector<double>& c, int m, int k, int n, bool acc) {
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      double s = acc ? c[static_cast<size_t>(i) * n + j] : 0.0;
      for (int p = 0; p < k; ++p)
        s += a[static_cast<size_t>(p) * m + i] * b[static_cast<size_t>(p) * n + j];
      c[static_cast<size_t>(i) * n + j] = s;
    }
}

void check_close(const std::vector<double>& got, const std::vector<double>& want,
                 double tol) {
  REQUIRE(got.size() == want.size());
  for (size_t i = 0; i < got.size(); ++i) {
    const double denom = std::max({std::fabs(want[i]), std::fabs(got[i]), 1.0});
    CHECK(std::fabs(got[i] - want[i]) / denom <= tol);
  }
}

void exercise_lane(const Ops& ops) {
  Rng rng(20240817);
  const int sizes[] = {1, 2, 3, 4, 5, 7, 8, 15, 16, 17, 33};
  for (int m : {1, 3, 17}) {
    for (int k : sizes) {
      for (int n : sizes) {
        auto a = rand_vec(rng, m * k);
        auto b = rand_vec(rng, k * n);
        auto bt = rand_vec(rng, n * k);
        auto at = rand_vec(rng, k * m);
        for (bool acc : {false, true}) {
          auto c0 = rand_vec(rng, m * n);
          auto c1 = c0;
          ops.gemm_nn(a.data(), b.data(), c0.data(), m, k, n, acc);
          naive_nn(a, b, c1, m, k, n, acc);
          check_close(c0, c1, 1e-12);

          c0 = rand_vec(rng, m * n);
          c1 = c0;
          ops.gemm_nt(a.data(), bt.data(), c0.data(), m, k, n, acc);
          naive_nt(a, bt, c1, m, k, n, acc);
          check_close(c0, c1, 1e-12);

          c0 = rand_vec(rng, m * n);
          c1 = c0;
          ops.gemm_tn(at.data(), b.data(), c0.data(), m, k, n, acc);
          naive_tn(at, b, c1, m, k, n, acc);
          check_close(c0, c1, 1e-12);
        }
      }
    }
  }

  for (int n : {1, 3, 4, 9, 64, 1001}) {
    auto a = rand_vec(rng, n);
    auto b = rand_vec(rng, n);
    std::vector<double> out(static_cast<size_t>(n));

    ops.add(a.data(), b.data(), out.data(), n);
    for (int i = 0; i < n; ++i) CHECK(out[static_cast<size_t>(i)] == a[static_cast<size_t>(i)] + b[static_cast<size_t>(i)]);
    ops.sub(a.data(), b.data(), out.data(), n);
    for (int i = 0; i < n; ++i) CHECK(out[static_cast<size_t>(i)] == a[static_cast<size_t>(i)] - b[static_cast<size_t>(i)]);
    ops.mul(a.data(), b.data(), out.data(), n);
    for (int i = 0; i < n; ++i) CHECK(out[static_cast<size_t>(i)] == a[static_cast<size_t>(i)] * b[static_cast<size_t>(i)]);
    ops.scale(1.5, a.data(), out.data(), n);
    for (int i = 0; i < n; ++i) CHECK(out[static_cast<size_t>(i)] == 1.5 * a[static_cast<size_t>(i)]);

    auto y = b;
    ops.axpy(0.75, a.data(), y.data(), n);
    for (int i = 0; i < n; ++i)
      CHECK(std::fabs(y[static_cast<size_t>(i)] - (b[static_cast<size_t>(i)] + 0.75 * a[static_cast<size_t>(i)])) <= 1e-15);

    double want_dot = 0.0, want_sum = 0.0;
    for (int i = 0; i < n; ++i) {
      want_dot += a[static_cast<size_t>(i)] * b[static_cast<size_t>(i)];
      want_sum += a[static_cast<size_t>(i)];
    }
    CHECK(std::fabs(ops.dot(a.data(), b.data(), n) - want_dot) <=
          1e-12 * std::max(1.0, std::fabs(want_dot)));
    CHECK(std::fabs(ops.sum(a.data(), n) - want_sum) <=
          1e-12 * std::max(1.0, std::fabs(want_sum)));
  }
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("scalar lane matches naive reference") {
  exercise_lane(physio::kernels::scalar_ops());
}

TEST_CASE("avx2 lane matches naive reference when available") {
  const Ops* v = physio::kernels::avx2_ops();
  if (!v) return;  // non-x86 or no AVX2: nothing to check
  exercise_lane(*v);
}

TEST_CASE("lanes agree with each other") {
  const Ops* v = physio::kernels::avx2_ops();
  if (!v) return;
  const Ops& s = physio::kernels::scalar_ops();
  Rng rng(7);
  const int m = 13, k = 37, n = 29;
  auto a = rand_vec(rng, m * k);
  auto b = rand_vec(rng, k * n);
  std::vector<double> c_s(static_cast<size_t>(m) * n), c_v(c_s);
  s.gemm_nn(a.data(), b.data(), c_s.data(), m, k, n, false);
  v->gemm_nn(a.data(), b.data(), c_v.data(), m, k, n, false);
  check_close(c_v, c_s, 1e-13);

  auto big = rand_vec(rng, 4097);
  CHECK(std::fabs(s.sum(big.data(), 4097) - v->sum(big.data(), 4097)) <= 1e-10);
}

TEST_CASE("active lane is one of the known tables") {
  const char* name = physio::kernels::active().name;
  const bool known = std::string(name) == "scalar" || std::string(name) == "avx2";
  CHECK(known);
}

}  // TEST_SUITE

// AVX2 variants of the numeric kernels. Each one mirrors the scalar
// reference exactly: vector lanes cover independent output elements and
// per-element arithmetic uses the same mul-then-add sequence (no FMA), so
// the results are bit-identical to the scalar path.

#if defined(__x86_64__) || defined(__i386__)

#include <immintrin.h>

#include "microtrain/kernels.hpp"

namespace microtrain::kernels::detail {

__attribute__((target("avx2"))) void matmul_avx2(const double* a,
                                                 const double* b, double* c,
                                                 int m, int k, int n,
                                                 bool accumulate) {
  if (!accumulate) {
    long long total = static_cast<long long>(m) * n;
    long long i = 0;
    const __m256d zero = _mm256_setzero_pd();
    for (; i + 4 <= total; i += 4) _mm256_storeu_pd(c + i, zero);
    for (; i < total; ++i) c[i] = 0.0;
  }
  for (int i = 0; i < m; ++i) {
    const double* arow = a + static_cast<long long>(i) * k;
    double* crow = c + static_cast<long long>(i) * n;
    for (int kk = 0; kk < k; ++kk) {
      const double av = arow[kk];
      const double* brow = b + static_cast<long long>(kk) * n;
      const __m256d avv = _mm256_set1_pd(av);
      int j = 0;
      for (; j + 4 <= n; j += 4) {
        __m256d bv = _mm256_loadu_pd(brow + j);
        __m256d cv = _mm256_loadu_pd(crow + j);
        cv = _mm256_add_pd(cv, _mm256_mul_pd(avv, bv));
        _mm256_storeu_pd(crow + j, cv);
      }
      for (; j < n; ++j) crow[j] = crow[j] + av * brow[j];
    }
  }
}

__attribute__((target("avx2"))) void relu_avx2(const double* x, double* y,
                                               long long n) {
  const __m256d zero = _mm256_setzero_pd();
  long long i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_loadu_pd(x + i);
    // max(v, 0) returns +0.0 for v <= 0, matching (v > 0 ? v : 0).
    _mm256_storeu_pd(y + i, _mm256_max_pd(v, zero));
  }
  for (; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

__attribute__((target("avx2"))) void relu_mask_avx2(const double* pre,
                                                    const double* g,
                                                    double* out, long long n) {
  const __m256d zero = _mm256_setzero_pd();
  long long i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d p = _mm256_loadu_pd(pre + i);
    __m256d gv = _mm256_loadu_pd(g + i);
    __m256d mask = _mm256_cmp_pd(p, zero, _CMP_GT_OQ);
    _mm256_storeu_pd(out + i, _mm256_and_pd(gv, mask));
  }
  for (; i < n; ++i) out[i] = pre[i] > 0.0 ? g[i] : 0.0;
}

__attribute__((target("avx2"))) void axpy_avx2(double a, const double* x,
                                               double* y, long long n) {
  const __m256d av = _mm256_set1_pd(a);
  long long i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d xv = _mm256_loadu_pd(x + i);
    __m256d yv = _mm256_loadu_pd(y + i);
    yv = _mm256_add_pd(yv, _mm256_mul_pd(av, xv));
    _mm256_storeu_pd(y + i, yv);
  }
  for (; i < n; ++i) y[i] = y[i] + a * x[i];
}

__attribute__((target("avx2"))) void momentum_update_avx2(
    double* v, const double* g, const double* theta, double mu, double wd,
    long long n) {
  const __m256d muv = _mm256_set1_pd(mu);
  const __m256d wdv = _mm256_set1_pd(wd);
  long long i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vv = _mm256_loadu_pd(v + i);
    __m256d gv = _mm256_loadu_pd(g + i);
    __m256d tv = _mm256_loadu_pd(theta + i);
    vv = _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(muv, vv), gv),
                       _mm256_mul_pd(wdv, tv));
    _mm256_storeu_pd(v + i, vv);
  }
  for (; i < n; ++i) v[i] = ((mu * v[i]) + g[i]) + (wd * theta[i]);
}

}  // namespace microtrain::kernels::detail

#endif  // x86

#include "microtrain/kernels.hpp"

namespace microtrain::kernels::detail {

// Loop order i,k,j: each c[i][j] accumulates contributions in ascending k,
// the same order a naive i,j,k dot-product loop would use.
void matmul_scalar(const double* a, const double* b, double* c, int m, int k,
                   int n, bool accumulate) {
  if (!accumulate) {
    for (long long i = 0; i < static_cast<long long>(m) * n; ++i) c[i] = 0.0;
  }
  for (int i = 0; i < m; ++i) {
    const double* arow = a + static_cast<long long>(i) * k;
    double* crow = c + static_cast<long long>(i) * n;
    for (int kk = 0; kk < k; ++kk) {
      const double av = arow[kk];
      const double* brow = b + static_cast<long long>(kk) * n;
      for (int j = 0; j < n; ++j) {
        crow[j] = crow[j] + av * brow[j];
      }
    }
  }
}

void relu_scalar(const double* x, double* y, long long n) {
  for (long long i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_mask_scalar(const double* pre, const double* g, double* out,
                      long long n) {
  for (long long i = 0; i < n; ++i) out[i] = pre[i] > 0.0 ? g[i] : 0.0;
}

void axpy_scalar(double a, const double* x, double* y, long long n) {
  for (long long i = 0; i < n; ++i) y[i] = y[i] + a * x[i];
}

void momentum_update_scalar(double* v, const double* g, const double* theta,
                            double mu, double wd, long long n) {
  for (long long i = 0; i < n; ++i) {
    v[i] = ((mu * v[i]) + g[i]) + (wd * theta[i]);
  }
}

}  // namespace microtrain::kernels::detail

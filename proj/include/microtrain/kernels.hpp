#pragma once

#include <cstdint>

// Low-level numeric kernels behind the tensor operations.
//
// Every kernel has a scalar reference implementation and, on x86-64 with
// AVX2, a vectorized variant selected once at runtime. The vector variants
// are written to be bit-identical to the scalar ones: they vectorize across
// independent output elements and keep each element's accumulation order
// unchanged (separate mul and add, no FMA). The equivalence is asserted by
// tests, so results do not depend on which path runs.
//
// Set MICROTRAIN_FORCE_SCALAR=1 in the environment (or call force_scalar)
// to pin the scalar path.

namespace microtrain::kernels {

enum class Isa { Scalar, Avx2 };

Isa active_isa();
const char* isa_name(Isa isa);
void force_scalar(bool on);

// c[m x n] = a[m x k] * b[k x n], row-major. Overwrites c.
void matmul(const double* a, const double* b, double* c, int m, int k, int n);

// c[m x n] += a[m x k] * b[k x n].
void matmul_acc(const double* a, const double* b, double* c, int m, int k,
                int n);

// at[cols x rows] = transpose of a[rows x cols].
void transpose(const double* a, double* at, int rows, int cols);

// y[i] = max(x[i], 0)
void relu(const double* x, double* y, long long n);

// out[i] = (pre[i] > 0) ? g[i] : 0
void relu_mask(const double* pre, const double* g, double* out, long long n);

// y[i] += a * x[i]
void axpy(double a, const double* x, double* y, long long n);

// v[i] = ((mu * v[i]) + g[i]) + (wd * theta[i])   -- SGD momentum buffer
void momentum_update(double* v, const double* g, const double* theta,
                     double mu, double wd, long long n);

namespace detail {
// Scalar reference implementations, exposed for equivalence tests.
void matmul_scalar(const double* a, const double* b, double* c, int m, int k,
                   int n, bool accumulate);
void relu_scalar(const double* x, double* y, long long n);
void relu_mask_scalar(const double* pre, const double* g, double* out,
                      long long n);
void axpy_scalar(double a, const double* x, double* y, long long n);
void momentum_update_scalar(double* v, const double* g, const double* theta,
                            double mu, double wd, long long n);

#if defined(__x86_64__) || defined(__i386__)
void matmul_avx2(const double* a, const double* b, double* c, int m, int k,
                 int n, bool accumulate);
void relu_avx2(const double* x, double* y, long long n);
void relu_mask_avx2(const double* pre, const double* g, double* out,
                    long long n);
void axpy_avx2(double a, const double* x, double* y, long long n);
void momentum_update_avx2(double* v, const double* g, const double* theta,
                          double mu, double wd, long long n);
#endif
}  // namespace detail

}  // namespace microtrain::kernels

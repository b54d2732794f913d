#include "microtrain/kernels.hpp"

#include <atomic>
#include <cstdlib>

namespace microtrain::kernels {

namespace {

std::atomic<bool> g_force_scalar{false};

bool env_forces_scalar() {
  const char* v = std::getenv("MICROTRAIN_FORCE_SCALAR");
  return v != nullptr && v[0] != '\0' && v[0] != '0';
}

Isa detect() {
#if defined(__x86_64__) || defined(__i386__)
  if (__builtin_cpu_supports("avx2")) return Isa::Avx2;
#endif
  return Isa::Scalar;
}

Isa cpu_isa() {
  static const Isa isa = detect();
  return isa;
}

bool scalar_only() {
  static const bool env = env_forces_scalar();
  return env || g_force_scalar.load(std::memory_order_relaxed);
}

}  // namespace

Isa active_isa() { return scalar_only() ? Isa::Scalar : cpu_isa(); }

const char* isa_name(Isa isa) {
  switch (isa) {
    case Isa::Avx2:
      return "avx2";
    case Isa::Scalar:
      return "scalar";
  }
  return "unknown";
}

void force_scalar(bool on) {
  g_force_scalar.store(on, std::memory_order_relaxed);
}

void matmul(const double* a, const double* b, double* c, int m, int k, int n) {
#if defined(__x86_64__) || defined(__i386__)
  if (active_isa() == Isa::Avx2) {
    detail::matmul_avx2(a, b, c, m, k, n, false);
    return;
  }
#endif
  detail::matmul_scalar(a, b, c, m, k, n, false);
}

void matmul_acc(const double* a, const double* b, double* c, int m, int k,
                int n) {
#if defined(__x86_64__) || defined(__i386__)
  if (active_isa() == Isa::Avx2) {
    detail::matmul_avx2(a, b, c, m, k, n, true);
    return;
  }
#endif
  detail::matmul_scalar(a, b, c, m, k, n, true);
}

void transpose(const double* a, double* at, int rows, int cols) {
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      at[static_cast<long long>(j) * rows + i] =
          a[static_cast<long long>(i) * cols + j];
}

void relu(const double* x, double* y, long long n) {
#if defined(__x86_64__) || defined(__i386__)
  if (active_isa() == Isa::Avx2) {
    detail::relu_avx2(x, y, n);
    return;
  }
#endif
  detail::relu_scalar(x, y, n);
}

void relu_mask(const double* pre, const double* g, double* out, long long n) {
#if defined(__x86_64__) || defined(__i386__)
  if (active_isa() == Isa::Avx2) {
    detail::relu_mask_avx2(pre, g, out, n);
    return;
  }
#endif
  detail::relu_mask_scalar(pre, g, out, n);
}

void axpy(double a, const double* x, double* y, long long n) {
#if defined(__x86_64__) || defined(__i386__)
  if (active_isa() == Isa::Avx2) {
    detail::axpy_avx2(a, x, y, n);
    return;
  }
#endif
  detail::axpy_scalar(a, x, y, n);
}

void momentum_update(double* v, const double* g, const double* theta,
                     double mu, double wd, long long n) {
#if defined(__x86_64__) || defined(__i386__)
  if (active_isa() == Isa::Avx2) {
    detail::momentum_update_avx2(v, g, theta, mu, wd, n);
    return;
  }
#endif
  detail::momentum_update_scalar(v, g, theta, mu, wd, n);
}

}  // namespace microtrain::kernels

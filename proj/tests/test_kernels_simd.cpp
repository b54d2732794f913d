#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <string>
#include <vector>

#include "microtrain/kernels.hpp"
#include "microtrain/rng.hpp"

// The AVX2 kernels must be bit-identical to the scalar references: same
// per-element accumulation order, no FMA. Every check here is exact.

namespace kernels = microtrain::kernels;
using microtrain::Rng;

namespace {

std::vector<double> random_vec(size_t n, Rng& rng, double lo = -2.0,
                               double hi = 2.0) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

bool bits_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

#if defined(__x86_64__) || defined(__i386__)

TEST_CASE("avx2 matmul is bit-identical to scalar (incl. odd tails)") {
  if (kernels::active_isa() != kernels::Isa::Avx2) {
    MESSAGE("no AVX2 on this CPU, dispatch test skipped");
    return;
  }
  Rng rng(101);
  for (int trial = 0; trial < 60; ++trial) {
    const int m = rng.uniform_int(1, 17), k = rng.uniform_int(1, 17),
              n = rng.uniform_int(1, 17);
    const auto a = random_vec(static_cast<size_t>(m) * k, rng);
    const auto b = random_vec(static_cast<size_t>(k) * n, rng);
    std::vector<double> c0(static_cast<size_t>(m) * n),
        c1(static_cast<size_t>(m) * n);
    kernels::detail::matmul_scalar(a.data(), b.data(), c0.data(), m, k, n,
                                   false);
    kernels::detail::matmul_avx2(a.data(), b.data(), c1.data(), m, k, n,
                                 false);
    CHECK(bits_equal(c0, c1));

    // accumulate variant
    auto base = random_vec(static_cast<size_t>(m) * n, rng);
    auto acc0 = base, acc1 = base;
    kernels::detail::matmul_scalar(a.data(), b.data(), acc0.data(), m, k, n,
                                   true);
    kernels::detail::matmul_avx2(a.data(), b.data(), acc1.data(), m, k, n,
                                 true);
    CHECK(bits_equal(acc0, acc1));
  }
}

TEST_CASE("avx2 elementwise kernels are bit-identical to scalar") {
  if (kernels::active_isa() != kernels::Isa::Avx2) return;
  Rng rng(102);
  for (size_t n : {1u, 3u, 4u, 7u, 8u, 129u, 1000u}) {
    auto x = random_vec(n, rng);
    x[0] = -0.0;  // signed-zero edge
    auto g = random_vec(n, rng);

    std::vector<double> r0(n), r1(n);
    kernels::detail::relu_scalar(x.data(), r0.data(), static_cast<long long>(n));
    kernels::detail::relu_avx2(x.data(), r1.data(), static_cast<long long>(n));
    CHECK(bits_equal(r0, r1));

    kernels::detail::relu_mask_scalar(x.data(), g.data(), r0.data(),
                                      static_cast<long long>(n));
    kernels::detail::relu_mask_avx2(x.data(), g.data(), r1.data(),
                                    static_cast<long long>(n));
    CHECK(bits_equal(r0, r1));

    auto y0 = random_vec(n, rng);
    auto y1 = y0;
    kernels::detail::axpy_scalar(-0.37, x.data(), y0.data(),
                                 static_cast<long long>(n));
    kernels::detail::axpy_avx2(-0.37, x.data(), y1.data(),
                               static_cast<long long>(n));
    CHECK(bits_equal(y0, y1));

    auto v0 = random_vec(n, rng);
    auto v1 = v0;
    const auto theta = random_vec(n, rng);
    kernels::detail::momentum_update_scalar(v0.data(), g.data(), theta.data(),
                                            0.9, 1e-4,
                                            static_cast<long long>(n));
    kernels::detail::momentum_update_avx2(v1.data(), g.data(), theta.data(),
                                          0.9, 1e-4,
                                          static_cast<long long>(n));
    CHECK(bits_equal(v0, v1));
  }
}

#endif  // x86

TEST_CASE("force_scalar pins the dispatch") {
  kernels::force_scalar(true);
  CHECK(kernels::active_isa() == kernels::Isa::Scalar);
  CHECK(std::string(kernels::isa_name(kernels::active_isa())) == "scalar");
  kernels::force_scalar(false);
#if defined(__x86_64__)
  if (__builtin_cpu_supports("avx2"))
    CHECK(kernels::active_isa() == kernels::Isa::Avx2);
#endif
}

TEST_CASE("dispatched results match forced-scalar results") {
  Rng rng(103);
  const int m = 13, k = 9, n = 11;
  const auto a = random_vec(static_cast<size_t>(m) * k, rng);
  const auto b = random_vec(static_cast<size_t>(k) * n, rng);
  std::vector<double> c_auto(static_cast<size_t>(m) * n),
      c_forced(static_cast<size_t>(m) * n);
  kernels::matmul(a.data(), b.data(), c_auto.data(), m, k, n);
  kernels::force_scalar(true);
  kernels::matmul(a.data(), b.data(), c_forced.data(), m, k, n);
  kernels::force_scalar(false);
  CHECK(bits_equal(c_auto, c_forced));
}

TEST_CASE("transpose round-trip") {
  Rng rng(104);
  const int r = 5, c = 7;
  const auto a = random_vec(static_cast<size_t>(r) * c, rng);
  std::vector<double> at(a.size()), back(a.size());
  kernels::transpose(a.data(), at.data(), r, c);
  kernels::transpose(at.data(), back.data(), c, r);
  CHECK(bits_equal(a, back));
  CHECK(at[0 * r + 3] == a[static_cast<size_t>(3) * c + 0]);
}

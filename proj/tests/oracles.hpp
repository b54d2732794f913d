#pragma once

// Independent reference implementations used to check the library. These
// deliberately share no code with src/: naive loop nests and direct
// formulas only.

#include <cmath>
#include <functional>
#include <vector>

#include "microtrain/rng.hpp"
#include "microtrain/tensor.hpp"

namespace oracles {

using microtrain::Rng;
using microtrain::Tensor;

inline Tensor random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0,
                            double hi = 1.0) {
  Tensor t(std::move(shape));
  for (long long i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

// c[i][j] = sum_k a[i][k] * b[k][j], the i,j,k dot-product order.
inline Tensor matmul_naive(const Tensor& a, const Tensor& b) {
  const int m = a.extent(0), k = a.extent(1), n = b.extent(1);
  Tensor c({m, n});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int kk = 0; kk < k; ++kk)
        s += a[static_cast<long long>(i) * k + kk] *
             b[static_cast<long long>(kk) * n + j];
      c[static_cast<long long>(i) * n + j] = s;
    }
  return c;
}

// Direct six-loop convolution with zero padding, no bias.
inline Tensor conv2d_naive(const Tensor& in, const Tensor& ker, int stride,
                           int pad) {
  const int cin = in.extent(0), h = in.extent(1), w = in.extent(2);
  const int cout = ker.extent(0), k = ker.extent(2);
  const int hout = (h + 2 * pad - k) / stride + 1;
  const int wout = (w + 2 * pad - k) / stride + 1;
  Tensor out({cout, hout, wout});
  for (int co = 0; co < cout; ++co)
    for (int oy = 0; oy < hout; ++oy)
      for (int ox = 0; ox < wout; ++ox) {
        double s = 0.0;
        for (int ci = 0; ci < cin; ++ci)
          for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
              const int iy = oy * stride - pad + ky;
              const int ix = ox * stride - pad + kx;
              if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
              s += ker[((static_cast<long long>(co) * cin + ci) * k + ky) * k +
                       kx] *
                   in[(static_cast<long long>(ci) * h + iy) * w + ix];
            }
        out[(static_cast<long long>(co) * hout + oy) * wout + ox] = s;
      }
  return out;
}

// Central finite difference of a scalar function at every coordinate of x.
inline Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f,
                               Tensor x, double h = 1e-5) {
  Tensor g(x.shape());
  for (long long i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double fp = f(x);
    x[i] = orig - h;
    const double fm = f(x);
    x[i] = orig;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

// max_i |a_i - b_i| / max(1, |b_i|)
inline double max_rel_err(const Tensor& a, const Tensor& b) {
  double worst = 0.0;
  for (long long i = 0; i < a.size(); ++i) {
    const double denom = std::max(1.0, std::abs(b[i]));
    worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
  }
  return worst;
}

// O(n^2) pairwise Mann-Whitney AUC with half credit for ties.
inline double auc_pairwise(const std::vector<int>& labels,
                           const std::vector<double>& scores) {
  double wins = 0.0;
  long long pairs = 0;
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 1) continue;
    for (size_t j = 0; j < labels.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j])
        wins += 1.0;
      else if (scores[i] == scores[j])
        wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

}  // namespace oracles

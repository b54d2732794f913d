#pragma once

#include <vector>

#include "microtrain/tensor.hpp"

// Forward operations and their analytic backward rules. All backward
// functions *accumulate* into the gradient tensors they are given, matching
// how gradients from multiple samples combine during a batch.

namespace microtrain::ops {

/// Explicit-copy reshape (no views).
Tensor reshape(const Tensor& t, std::vector<int> new_shape);

/// c[m x n] = a[m x k] * b[k x n]. Throws std::invalid_argument on shape
/// mismatch, naming both shapes.
Tensor matmul(const Tensor& a, const Tensor& b);

/// grad_a += g * b^T, grad_b += a^T * g. Either output may be null.
void matmul_backward(const Tensor& a, const Tensor& b, const Tensor& g,
                     Tensor* grad_a, Tensor* grad_b);

struct Conv2dGeom {
  int cin, h, w;
  int cout, k;
  int stride, pad;
  int hout, wout;
};

/// Validates shapes and computes output extents:
///   hout = (h + 2*pad - k) / stride + 1, likewise wout.
Conv2dGeom conv2d_geometry(const std::vector<int>& input_shape,
                           const std::vector<int>& kernel_shape, int stride,
                           int pad);

/// input [Cin x H x W], kernels [Cout x Cin x k x k] -> [Cout x H' x W'].
/// Zero padding, no bias.
Tensor conv2d(const Tensor& input, const Tensor& kernels, int stride, int pad);

/// Accumulates input/kernel gradients for conv2d. Either output may be null.
void conv2d_backward(const Tensor& input, const Tensor& kernels,
                     const Tensor& grad_out, int stride, int pad,
                     Tensor* grad_input, Tensor* grad_kernels);

Tensor relu(const Tensor& x);
/// grad wrt input of relu: passes g where pre > 0, zero elsewhere
/// (subgradient at exactly 0 is defined as 0).
Tensor relu_backward(const Tensor& pre, const Tensor& g);

/// Numerically stable logistic. Saturated results are nudged to the nearest
/// representable value inside (0,1) so the output range is strictly open.
Tensor sigmoid(const Tensor& x);
double sigmoid1(double x);
/// grad wrt input given sig = sigmoid(x): g * sig * (1 - sig).
Tensor sigmoid_backward(const Tensor& sig, const Tensor& g);

/// [C x H x W] -> [C], per-channel mean.
Tensor global_avg_pool(const Tensor& x);
Tensor global_avg_pool_backward(const Tensor& g,
                                const std::vector<int>& input_shape);

}  // namespace microtrain::ops

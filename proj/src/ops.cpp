#include "microtrain/ops.hpp"

#include <cfloat>
#include <cmath>
#include <stdexcept>
#include <string>

#include "microtrain/kernels.hpp"

namespace microtrain::ops {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// col[(ci*k + ky)*k + kx][oy*wout + ox] = padded input pixel. The row order
// (ci, ky, kx) fixes the accumulation order of the matmul contraction to
// match a direct convolution loop.
void im2col(const double* in, const Conv2dGeom& g, double* col) {
  const int kk = g.k;
  const long long plane = static_cast<long long>(g.h) * g.w;
  const long long pcount = static_cast<long long>(g.hout) * g.wout;
  long long row = 0;
  for (int ci = 0; ci < g.cin; ++ci) {
    const double* inp = in + ci * plane;
    for (int ky = 0; ky < kk; ++ky) {
      for (int kx = 0; kx < kk; ++kx, ++row) {
        double* crow = col + row * pcount;
        long long p = 0;
        for (int oy = 0; oy < g.hout; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          for (int ox = 0; ox < g.wout; ++ox, ++p) {
            const int ix = ox * g.stride - g.pad + kx;
            crow[p] = (iy >= 0 && iy < g.h && ix >= 0 && ix < g.w)
                          ? inp[static_cast<long long>(iy) * g.w + ix]
                          : 0.0;
          }
        }
      }
    }
  }
}

// Scatter-add of the column gradient back onto the input plane.
void col2im_acc(const double* col, const Conv2dGeom& g, double* grad_in) {
  const int kk = g.k;
  const long long plane = static_cast<long long>(g.h) * g.w;
  const long long pcount = static_cast<long long>(g.hout) * g.wout;
  long long row = 0;
  for (int ci = 0; ci < g.cin; ++ci) {
    double* gin = grad_in + ci * plane;
    for (int ky = 0; ky < kk; ++ky) {
      for (int kx = 0; kx < kk; ++kx, ++row) {
        const double* crow = col + row * pcount;
        long long p = 0;
        for (int oy = 0; oy < g.hout; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          for (int ox = 0; ox < g.wout; ++ox, ++p) {
            const int ix = ox * g.stride - g.pad + kx;
            if (iy >= 0 && iy < g.h && ix >= 0 && ix < g.w)
              gin[static_cast<long long>(iy) * g.w + ix] += crow[p];
          }
        }
      }
    }
  }
}

}  // namespace

Tensor reshape(const Tensor& t, std::vector<int> new_shape) {
  require(shape_product(new_shape) == t.size(),
          "reshape: " + shape_str(t.shape()) + " -> " + shape_str(new_shape) +
              " changes element count");
  std::vector<double> data(t.data(), t.data() + t.size());
  return Tensor(std::move(new_shape), std::move(data));
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require(a.rank() == 2 && b.rank() == 2 && a.extent(1) == b.extent(0),
          "matmul: incompatible shapes " + shape_str(a.shape()) + " and " +
              shape_str(b.shape()));
  const int m = a.extent(0), k = a.extent(1), n = b.extent(1);
  Tensor c({m, n});
  kernels::matmul(a.data(), b.data(), c.data(), m, k, n);
  return c;
}

void matmul_backward(const Tensor& a, const Tensor& b, const Tensor& g,
                     Tensor* grad_a, Tensor* grad_b) {
  const int m = a.extent(0), k = a.extent(1), n = b.extent(1);
  require(g.rank() == 2 && g.extent(0) == m && g.extent(1) == n,
          "matmul_backward: upstream shape " + shape_str(g.shape()) +
              " does not match output [" + std::to_string(m) + "x" +
              std::to_string(n) + "]");
  if (grad_a) {
    require(grad_a->same_shape(a), "matmul_backward: grad_a shape mismatch");
    Tensor bt({n, k});
    kernels::transpose(b.data(), bt.data(), k, n);
    kernels::matmul_acc(g.data(), bt.data(), grad_a->data(), m, n, k);
  }
  if (grad_b) {
    require(grad_b->same_shape(b), "matmul_backward: grad_b shape mismatch");
    Tensor at({k, m});
    kernels::transpose(a.data(), at.data(), m, k);
    kernels::matmul_acc(at.data(), g.data(), grad_b->data(), k, m, n);
  }
}

Conv2dGeom conv2d_geometry(const std::vector<int>& input_shape,
                           const std::vector<int>& kernel_shape, int stride,
                           int pad) {
  require(input_shape.size() == 3,
          "conv2d: input must be [Cin x H x W], got " + shape_str(input_shape));
  require(kernel_shape.size() == 4 && kernel_shape[2] == kernel_shape[3],
          "conv2d: kernels must be [Cout x Cin x k x k], got " +
              shape_str(kernel_shape));
  require(kernel_shape[1] == input_shape[0],
          "conv2d: channel mismatch between input " + shape_str(input_shape) +
              " and kernels " + shape_str(kernel_shape));
  require(stride >= 1, "conv2d: stride must be >= 1");
  require(pad >= 0, "conv2d: pad must be >= 0");
  Conv2dGeom g;
  g.cin = input_shape[0];
  g.h = input_shape[1];
  g.w = input_shape[2];
  g.cout = kernel_shape[0];
  g.k = kernel_shape[2];
  g.stride = stride;
  g.pad = pad;
  require(g.k <= g.h + 2 * pad && g.k <= g.w + 2 * pad,
          "conv2d: kernel " + std::to_string(g.k) +
              " exceeds padded input " + shape_str(input_shape));
  g.hout = (g.h + 2 * pad - g.k) / stride + 1;
  g.wout = (g.w + 2 * pad - g.k) / stride + 1;
  require(g.hout > 0 && g.wout > 0,
          "conv2d: non-positive output extent for input " +
              shape_str(input_shape) + " with kernels " +
              shape_str(kernel_shape));
  return g;
}

Tensor conv2d(const Tensor& input, const Tensor& kernels_t, int stride,
              int pad) {
  const Conv2dGeom g =
      conv2d_geometry(input.shape(), kernels_t.shape(), stride, pad);
  const int kdim = g.cin * g.k * g.k;
  const long long pcount = static_cast<long long>(g.hout) * g.wout;
  Tensor col({kdim, static_cast<int>(pcount)});
  im2col(input.data(), g, col.data());
  // Kernel tensor [Cout x Cin x k x k] is already the row-major [Cout x kdim]
  // weight matrix.
  Tensor out({g.cout, g.hout, g.wout});
  kernels::matmul(kernels_t.data(), col.data(), out.data(), g.cout, kdim,
                  static_cast<int>(pcount));
  return out;
}

void conv2d_backward(const Tensor& input, const Tensor& kernels_t,
                     const Tensor& grad_out, int stride, int pad,
                     Tensor* grad_input, Tensor* grad_kernels) {
  const Conv2dGeom g =
      conv2d_geometry(input.shape(), kernels_t.shape(), stride, pad);
  require(grad_out.rank() == 3 && grad_out.extent(0) == g.cout &&
              grad_out.extent(1) == g.hout && grad_out.extent(2) == g.wout,
          "conv2d_backward: upstream shape " + shape_str(grad_out.shape()) +
              " does not match output geometry");
  const int kdim = g.cin * g.k * g.k;
  const int pcount = g.hout * g.wout;
  Tensor col({kdim, pcount});
  im2col(input.data(), g, col.data());
  if (grad_kernels) {
    require(grad_kernels->same_shape(kernels_t),
            "conv2d_backward: grad_kernels shape mismatch");
    Tensor colt({pcount, kdim});
    kernels::transpose(col.data(), colt.data(), kdim, pcount);
    kernels::matmul_acc(grad_out.data(), colt.data(), grad_kernels->data(),
                        g.cout, pcount, kdim);
  }
  if (grad_input) {
    require(grad_input->same_shape(input),
            "conv2d_backward: grad_input shape mismatch");
    Tensor wt({kdim, g.cout});
    kernels::transpose(kernels_t.data(), wt.data(), g.cout, kdim);
    Tensor gcol({kdim, pcount});
    kernels::matmul(wt.data(), grad_out.data(), gcol.data(), kdim, g.cout,
                    pcount);
    col2im_acc(gcol.data(), g, grad_input->data());
  }
}

Tensor relu(const Tensor& x) {
  Tensor y(x.shape());
  kernels::relu(x.data(), y.data(), x.size());
  return y;
}

Tensor relu_backward(const Tensor& pre, const Tensor& g) {
  require(pre.same_shape(g), "relu_backward: shape mismatch " +
                                 shape_str(pre.shape()) + " vs " +
                                 shape_str(g.shape()));
  Tensor out(pre.shape());
  kernels::relu_mask(pre.data(), g.data(), out.data(), pre.size());
  return out;
}

double sigmoid1(double x) {
  double y;
  if (x >= 0.0) {
    y = 1.0 / (1.0 + std::exp(-x));
  } else {
    const double e = std::exp(x);
    y = e / (1.0 + e);
  }
  if (y >= 1.0) y = 1.0 - DBL_EPSILON / 2;
  if (y <= 0.0) y = DBL_MIN;
  return y;
}

Tensor sigmoid(const Tensor& x) {
  Tensor y(x.shape());
  for (long long i = 0; i < x.size(); ++i) y[i] = sigmoid1(x[i]);
  return y;
}

Tensor sigmoid_backward(const Tensor& sig, const Tensor& g) {
  require(sig.same_shape(g), "sigmoid_backward: shape mismatch");
  Tensor out(sig.shape());
  for (long long i = 0; i < sig.size(); ++i)
    out[i] = g[i] * sig[i] * (1.0 - sig[i]);
  return out;
}

Tensor global_avg_pool(const Tensor& x) {
  require(x.rank() == 3,
          "global_avg_pool: expected [C x H x W], got " + shape_str(x.shape()));
  const int c = x.extent(0);
  const long long plane = static_cast<long long>(x.extent(1)) * x.extent(2);
  Tensor out({c});
  for (int ci = 0; ci < c; ++ci) {
    double s = 0.0;
    const double* p = x.data() + ci * plane;
    for (long long i = 0; i < plane; ++i) s += p[i];
    out[ci] = s / static_cast<double>(plane);
  }
  return out;
}

Tensor global_avg_pool_backward(const Tensor& g,
                                const std::vector<int>& input_shape) {
  require(input_shape.size() == 3 && g.rank() == 1 &&
              g.extent(0) == input_shape[0],
          "global_avg_pool_backward: grad " + shape_str(g.shape()) +
              " does not match input " + shape_str(input_shape));
  Tensor out(input_shape);
  const long long plane =
      static_cast<long long>(input_shape[1]) * input_shape[2];
  for (int ci = 0; ci < input_shape[0]; ++ci) {
    const double v = g[ci] / static_cast<double>(plane);
    double* p = out.data() + ci * plane;
    for (long long i = 0; i < plane; ++i) p[i] = v;
  }
  return out;
}

}  // namespace microtrain::ops

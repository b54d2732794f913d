#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <sstream>

#include "microtrain/ops.hpp"
#include "microtrain/rng.hpp"
#include "microtrain/tensor.hpp"
#include "oracles.hpp"

using microtrain::Rng;
using microtrain::Tensor;
namespace ops = microtrain::ops;

TEST_CASE("tensor shape/data invariants") {
  Tensor t({2, 3});
  CHECK(t.size() == 6);
  CHECK(t.all_finite());
  CHECK_THROWS_AS(Tensor({2, 0}), std::invalid_argument);
  CHECK_THROWS_AS(Tensor({2, 2}, {1.0, 2.0, 3.0}), std::invalid_argument);
}

TEST_CASE("PTNS serialization round-trips bit-exactly") {
  Rng rng(7);
  Tensor t = oracles::random_tensor({3, 4, 5}, rng);
  t[0] = -0.0;
  t[1] = 1e-308;
  std::stringstream ss;
  t.write(ss);
  Tensor u = Tensor::read(ss);
  REQUIRE(u.same_shape(t));
  for (long long i = 0; i < t.size(); ++i) {
    const double a = t[i], b = u[i];
    CHECK(std::memcmp(&a, &b, 8) == 0);
  }

  std::stringstream bad("XXXX");
  CHECK_THROWS(Tensor::read(bad));
}

TEST_CASE("PTNS layout is little-endian with u32 header fields") {
  Tensor t({1}, {1.0});
  std::stringstream ss;
  t.write(ss);
  const std::string bytes = ss.str();
  REQUIRE(bytes.size() == 4 + 4 + 4 + 8);
  CHECK(bytes.substr(0, 4) == "PTNS");
  CHECK(static_cast<unsigned char>(bytes[4]) == 1);  // rank LE
  CHECK(static_cast<unsigned char>(bytes[8]) == 1);  // extent LE
  // 1.0 = 0x3FF0000000000000, little-endian: 00..00 F0 3F
  CHECK(static_cast<unsigned char>(bytes[18]) == 0xf0);
  CHECK(static_cast<unsigned char>(bytes[19]) == 0x3f);
}

TEST_CASE("matmul identity and row sums") {
  Tensor eye({2, 2}, {1, 0, 0, 1});
  Tensor r = ops::matmul(eye, eye);
  CHECK(r[0] == 1.0);
  CHECK(r[1] == 0.0);
  CHECK(r[2] == 0.0);
  CHECK(r[3] == 1.0);

  Tensor a({2, 2}, {1, 2, 3, 4});
  Tensor ones({2, 1}, {1, 1});
  Tensor s = ops::matmul(a, ones);
  CHECK(s[0] == 3.0);
  CHECK(s[1] == 7.0);
}

TEST_CASE("matmul matches triple-loop oracle") {
  Rng rng(11);
  Tensor a = oracles::random_tensor({3, 4}, rng);
  Tensor b = oracles::random_tensor({4, 2}, rng);
  CHECK(oracles::max_rel_err(ops::matmul(a, b), oracles::matmul_naive(a, b)) <
        1e-12);

  for (int trial = 0; trial < 20; ++trial) {
    const int m = rng.uniform_int(1, 16), k = rng.uniform_int(1, 16),
              n = rng.uniform_int(1, 16);
    Tensor x = oracles::random_tensor({m, k}, rng);
    Tensor y = oracles::random_tensor({k, n}, rng);
    CHECK(oracles::max_rel_err(ops::matmul(x, y),
                               oracles::matmul_naive(x, y)) < 1e-12);
  }
}

TEST_CASE("matmul shape errors name both shapes") {
  Tensor a({2, 3});
  Tensor b({2, 3});
  try {
    ops::matmul(a, b);
    FAIL("expected throw");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[2x3]") != std::string::npos);
  }
}

TEST_CASE("conv2d trivial cases") {
  // 1x1 kernel of value 2 scales the input
  Tensor in({1, 3, 3});
  in.fill(1.0);
  Tensor k1({1, 1, 1, 1}, {2.0});
  Tensor out = ops::conv2d(in, k1, 1, 0);
  REQUIRE(out.shape() == std::vector<int>{1, 3, 3});
  for (long long i = 0; i < out.size(); ++i) CHECK(out[i] == 2.0);

  // 3x3 box filter sums the input
  Rng rng(3);
  Tensor in2 = oracles::random_tensor({1, 3, 3}, rng);
  Tensor ones({1, 1, 3, 3});
  ones.fill(1.0);
  Tensor s = ops::conv2d(in2, ones, 1, 0);
  REQUIRE(s.shape() == std::vector<int>{1, 1, 1});
  double total = 0.0;
  for (long long i = 0; i < in2.size(); ++i) total += in2[i];
  CHECK(s[0] == doctest::Approx(total).epsilon(1e-12));
}

TEST_CASE("conv2d matches six-loop oracle") {
  Rng rng(17);
  Tensor in = oracles::random_tensor({2, 8, 8}, rng);
  Tensor ker = oracles::random_tensor({4, 2, 3, 3}, rng);
  for (int stride : {1, 2}) {
    for (int pad : {0, 1}) {
      Tensor got = ops::conv2d(in, ker, stride, pad);
      Tensor want = oracles::conv2d_naive(in, ker, stride, pad);
      REQUIRE(got.same_shape(want));
      CHECK(oracles::max_rel_err(got, want) < 1e-12);
    }
  }
  for (int trial = 0; trial < 10; ++trial) {
    const int cin = rng.uniform_int(1, 3), cout = rng.uniform_int(1, 4);
    const int h = rng.uniform_int(5, 16), w = rng.uniform_int(5, 16);
    const int k = rng.uniform_int(1, 3) * 2 - 1;  // 1, 3, 5
    const int stride = rng.uniform_int(1, 2), pad = rng.uniform_int(0, 1);
    if (k > h + 2 * pad || k > w + 2 * pad) continue;
    Tensor x = oracles::random_tensor({cin, h, w}, rng);
    Tensor kk = oracles::random_tensor({cout, cin, k, k}, rng);
    CHECK(oracles::max_rel_err(ops::conv2d(x, kk, stride, pad),
                               oracles::conv2d_naive(x, kk, stride, pad)) <
          1e-12);
  }
}

TEST_CASE("conv2d dimension errors") {
  Tensor in({1, 3, 3});
  Tensor big({1, 1, 5, 5});
  CHECK_THROWS_AS(ops::conv2d(in, big, 1, 0), std::invalid_argument);
  Tensor mismatched({1, 2, 3, 3});
  CHECK_THROWS_AS(ops::conv2d(in, mismatched, 1, 1), std::invalid_argument);
}

TEST_CASE("elementwise ops definitions") {
  Tensor x({3}, {-3.0, 0.0, 3.0});
  Tensor r = ops::relu(x);
  CHECK(r[0] == 0.0);
  CHECK(r[1] == 0.0);
  CHECK(r[2] == 3.0);

  Tensor z({1}, {0.0});
  CHECK(ops::sigmoid(z)[0] == 0.5);

  Tensor block({1, 2, 2}, {1, 2, 3, 4});
  CHECK(ops::global_avg_pool(block)[0] == doctest::Approx(2.5));
}

TEST_CASE("sigmoid is stable and strictly inside (0,1)") {
  for (double v : {-1e6, -745.0, -40.0, -1.0, 0.0, 1.0, 40.0, 745.0, 1e6}) {
    Tensor x({1}, {v});
    const double s = ops::sigmoid(x)[0];
    CHECK(s > 0.0);
    CHECK(s < 1.0);
    CHECK(std::isfinite(s));
  }
}

namespace {

// Scalar probe: sum of squared outputs, so upstream grad is just 2*out.
double sum_sq(const Tensor& t) {
  double s = 0.0;
  for (long long i = 0; i < t.size(); ++i) s += t[i] * t[i];
  return s;
}

Tensor two_times(const Tensor& t) {
  Tensor g(t.shape());
  for (long long i = 0; i < t.size(); ++i) g[i] = 2.0 * t[i];
  return g;
}

}  // namespace

TEST_CASE("backward rules match central finite differences") {
  Rng rng(23);

  SUBCASE("matmul grads") {
    Tensor a = oracles::random_tensor({3, 4}, rng);
    Tensor b = oracles::random_tensor({4, 2}, rng);
    Tensor out = ops::matmul(a, b);
    Tensor ga(a.shape()), gb(b.shape());
    ops::matmul_backward(a, b, two_times(out), &ga, &gb);
    Tensor fa = oracles::finite_diff_grad(
        [&](const Tensor& aa) { return sum_sq(ops::matmul(aa, b)); }, a);
    Tensor fb = oracles::finite_diff_grad(
        [&](const Tensor& bb) { return sum_sq(ops::matmul(a, bb)); }, b);
    CHECK(oracles::max_rel_err(ga, fa) < 1e-6);
    CHECK(oracles::max_rel_err(gb, fb) < 1e-6);
  }

  SUBCASE("conv2d grads, stride 1 and 2") {
    for (int stride : {1, 2}) {
      Tensor in = oracles::random_tensor({2, 6, 6}, rng);
      Tensor ker = oracles::random_tensor({3, 2, 3, 3}, rng);
      Tensor out = ops::conv2d(in, ker, stride, 1);
      Tensor gi(in.shape()), gk(ker.shape());
      ops::conv2d_backward(in, ker, two_times(out), stride, 1, &gi, &gk);
      Tensor fi = oracles::finite_diff_grad(
          [&](const Tensor& x) {
            return sum_sq(ops::conv2d(x, ker, stride, 1));
          },
          in);
      Tensor fk = oracles::finite_diff_grad(
          [&](const Tensor& k) {
            return sum_sq(ops::conv2d(in, k, stride, 1));
          },
          ker);
      CHECK(oracles::max_rel_err(gi, fi) < 1e-6);
      CHECK(oracles::max_rel_err(gk, fk) < 1e-6);
    }
  }

  SUBCASE("relu grad") {
    // keep values away from the kink so finite differences are valid
    Tensor x = oracles::random_tensor({40}, rng);
    for (long long i = 0; i < x.size(); ++i)
      if (std::abs(x[i]) < 0.05) x[i] = 0.1;
    Tensor out = ops::relu(x);
    Tensor g = ops::relu_backward(x, two_times(out));
    Tensor f = oracles::finite_diff_grad(
        [&](const Tensor& xx) { return sum_sq(ops::relu(xx)); }, x);
    CHECK(oracles::max_rel_err(g, f) < 1e-6);
  }

  SUBCASE("sigmoid grad") {
    Tensor x = oracles::random_tensor({40}, rng, -4.0, 4.0);
    Tensor s = ops::sigmoid(x);
    Tensor g = ops::sigmoid_backward(s, two_times(s));
    Tensor f = oracles::finite_diff_grad(
        [&](const Tensor& xx) { return sum_sq(ops::sigmoid(xx)); }, x);
    CHECK(oracles::max_rel_err(g, f) < 1e-6);
  }

  SUBCASE("global_avg_pool grad") {
    Tensor x = oracles::random_tensor({3, 4, 4}, rng);
    Tensor out = ops::global_avg_pool(x);
    Tensor g = ops::global_avg_pool_backward(two_times(out), x.shape());
    Tensor f = oracles::finite_diff_grad(
        [&](const Tensor& xx) { return sum_sq(ops::global_avg_pool(xx)); }, x);
    CHECK(oracles::max_rel_err(g, f) < 1e-6);
  }
}

TEST_CASE("relu derivative at exactly 0 is 0") {
  Tensor pre({1}, {0.0});
  Tensor g({1}, {5.0});
  CHECK(ops::relu_backward(pre, g)[0] == 0.0);
}

TEST_CASE("reshape copies and validates") {
  Tensor t({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor r = ops::reshape(t, {3, 2});
  CHECK(r[4] == 5.0);
  CHECK_THROWS_AS(ops::reshape(t, {4, 2}), std::invalid_argument);
}

TEST_CASE("ops keep finite inputs finite") {
  Rng rng(31);
  Tensor in = oracles::random_tensor({2, 8, 8}, rng, -10.0, 10.0);
  Tensor ker = oracles::random_tensor({3, 2, 3, 3}, rng, -10.0, 10.0);
  CHECK(ops::conv2d(in, ker, 1, 1).all_finite());
  CHECK(ops::relu(in).all_finite());
  CHECK(ops::sigmoid(in).all_finite());
  CHECK(ops::global_avg_pool(in).all_finite());
}

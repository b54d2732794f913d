#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace microtrain {

/// Dense n-dimensional array of doubles, row-major flat storage.
/// No views, no broadcasting: every operation copies explicitly so the
/// backward rules stay auditable.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape);  // zero-filled
  Tensor(std::vector<int> shape, std::vector<double> data);

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  long long size() const { return static_cast<long long>(data_.size()); }
  int extent(int axis) const { return shape_[static_cast<size_t>(axis)]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double& operator[](long long i) { return data_[static_cast<size_t>(i)]; }
  double operator[](long long i) const { return data_[static_cast<size_t>(i)]; }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;
  void fill(double v);

  /// Binary format "PTNS": magic, u32 rank, rank x u32 extents, f64 payload,
  /// all little-endian.
  void write(std::ostream& out) const;
  static Tensor read(std::istream& in);

 private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

std::string shape_str(const std::vector<int>& shape);
long long shape_product(const std::vector<int>& shape);

/// A parameter (or activation) paired with its gradient accumulator.
struct GradPair {
  Tensor value;
  Tensor grad;

  GradPair() = default;
  explicit GradPair(Tensor v) : value(std::move(v)), grad(value.shape()) {}

  void zero_grad() { grad.fill(0.0); }
};

}  // namespace microtrain

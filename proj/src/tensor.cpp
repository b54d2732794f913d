#include "microtrain/tensor.hpp"

#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace microtrain {

namespace {

constexpr char kMagic[4] = {'P', 'T', 'N', 'S'};

void write_u32(std::ostream& out, uint32_t v) {
  char b[4];
  b[0] = static_cast<char>(v & 0xff);
  b[1] = static_cast<char>((v >> 8) & 0xff);
  b[2] = static_cast<char>((v >> 16) & 0xff);
  b[3] = static_cast<char>((v >> 24) & 0xff);
  out.write(b, 4);
}

uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw std::runtime_error("tensor read: truncated header");
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) |
         (static_cast<uint32_t>(b[3]) << 24);
}

void write_f64(std::ostream& out, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  out.write(b, 8);
}

double read_f64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) throw std::runtime_error("tensor read: truncated payload");
  uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace

std::string shape_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << "x";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

long long shape_product(const std::vector<int>& shape) {
  long long p = 1;
  for (int e : shape) p *= e;
  return p;
}

Tensor::Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
  for (int e : shape_) {
    if (e <= 0)
      throw std::invalid_argument("tensor: non-positive extent in " +
                                  shape_str(shape_));
  }
  data_.assign(static_cast<size_t>(shape_product(shape_)), 0.0);
}

Tensor::Tensor(std::vector<int> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  for (int e : shape_) {
    if (e <= 0)
      throw std::invalid_argument("tensor: non-positive extent in " +
                                  shape_str(shape_));
  }
  if (shape_product(shape_) != static_cast<long long>(data_.size()))
    throw std::invalid_argument(
        "tensor: data length " + std::to_string(data_.size()) +
        " does not match shape " + shape_str(shape_));
}

bool Tensor::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

void Tensor::fill(double v) {
  for (double& x : data_) x = v;
}

void Tensor::write(std::ostream& out) const {
  out.write(kMagic, 4);
  write_u32(out, static_cast<uint32_t>(shape_.size()));
  for (int e : shape_) write_u32(out, static_cast<uint32_t>(e));
  for (double v : data_) write_f64(out, v);
}

Tensor Tensor::read(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("tensor read: bad magic (expected PTNS)");
  uint32_t rank = read_u32(in);
  if (rank > 8) throw std::runtime_error("tensor read: implausible rank");
  std::vector<int> shape(rank);
  for (uint32_t i = 0; i < rank; ++i) {
    uint32_t e = read_u32(in);
    if (e == 0 || e > (1u << 28))
      throw std::runtime_error("tensor read: implausible extent");
    shape[i] = static_cast<int>(e);
  }
  long long count = shape_product(shape);
  std::vector<double> data(static_cast<size_t>(count));
  for (long long i = 0; i < count; ++i) data[static_cast<size_t>(i)] = read_f64(in);
  return Tensor(std::move(shape), std::move(data));
}

}  // namespace microtrain

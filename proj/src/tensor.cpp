#include "dann/tensor.hpp"

#include <cmath>
#include <sstream>

#include "dann/errors.hpp"

namespace dann {

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return shape.empty() ? 0 : n;
}

std::string shape_to_string(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << "x";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

Tensor::Tensor(std::vector<std::size_t> dims) : shape(std::move(dims)) {
  for (std::size_t d : shape) {
    if (d == 0) throw DimensionError("tensor dimension must be positive, got shape " + shape_to_string(shape));
  }
  data.assign(shape_numel(shape), 0.0);
}

Tensor::Tensor(std::vector<std::size_t> dims, std::vector<double> values)
    : shape(std::move(dims)), data(std::move(values)) {
  for (std::size_t d : shape) {
    if (d == 0) throw DimensionError("tensor dimension must be positive, got shape " + shape_to_string(shape));
  }
  if (data.size() != shape_numel(shape)) {
    throw DimensionError("data length " + std::to_string(data.size()) +
                         " does not match shape " + shape_to_string(shape));
  }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.shape[1] != b.shape[0]) {
    throw DimensionError("matmul shape mismatch: " + shape_to_string(a.shape) +
                         " x " + shape_to_string(b.shape));
  }
  const std::size_t m = a.shape[0], k = a.shape[1], n = b.shape[1];
  Tensor c({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a.data[i * k + p];
      if (av == 0.0) continue;
      const double* brow = &b.data[p * n];
      double* crow = &c.data[i * n];
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

Tensor elementwise(const Tensor& a, const Tensor& b, ElemOp op) {
  if (!a.same_shape(b)) {
    throw DimensionError("elementwise shape mismatch: " + shape_to_string(a.shape) +
                         " vs " + shape_to_string(b.shape));
  }
  Tensor out(a.shape);
  switch (op) {
    case ElemOp::Add:
      for (std::size_t i = 0; i < a.numel(); ++i) out.data[i] = a.data[i] + b.data[i];
      break;
    case ElemOp::Sub:
      for (std::size_t i = 0; i < a.numel(); ++i) out.data[i] = a.data[i] - b.data[i];
      break;
    case ElemOp::Mul:
      for (std::size_t i = 0; i < a.numel(); ++i) out.data[i] = a.data[i] * b.data[i];
      break;
  }
  return out;
}

Tensor glorot_init(std::size_t fan_in, std::size_t fan_out,
                   std::vector<std::size_t> dims, Rng& rng) {
  if (fan_in < 1 || fan_out < 1) {
    throw ArgumentError("glorot_init fans must be >= 1, got fan_in=" +
                        std::to_string(fan_in) + " fan_out=" + std::to_string(fan_out));
  }
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Tensor out(std::move(dims));
  for (double& v : out.data) v = dist(rng);
  return out;
}

}  // namespace dann

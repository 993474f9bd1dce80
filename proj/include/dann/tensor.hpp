#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace dann {

using Rng = std::mt19937_64;

/// Dense row-major tensor of doubles. Shape is immutable after
/// construction; data length always equals the product of the dims.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> dims);
  Tensor(std::vector<std::size_t> dims, std::vector<double> values);

  std::size_t numel() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t dim(std::size_t i) const { return shape[i]; }

  // 2-d and 3-d accessors; row-major.
  double& at(std::size_t i, std::size_t j) { return data[i * shape[1] + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * shape[1] + j]; }
  double& at(std::size_t i, std::size_t j, std::size_t k) {
    return data[(i * shape[1] + j) * shape[2] + k];
  }
  double at(std::size_t i, std::size_t j, std::size_t k) const {
    return data[(i * shape[1] + j) * shape[2] + k];
  }

  bool same_shape(const Tensor& other) const { return shape == other.shape; }

  static Tensor zeros(std::vector<std::size_t> dims) { return Tensor(std::move(dims)); }
  static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape); }
};

std::string shape_to_string(const std::vector<std::size_t>& shape);

std::size_t shape_numel(const std::vector<std::size_t>& shape);

/// C[MxN] = A[MxK] * B[KxN]. Throws DimensionError on mismatch.
Tensor matmul(const Tensor& a, const Tensor& b);

enum class ElemOp { Add, Sub, Mul };

Tensor elementwise(const Tensor& a, const Tensor& b, ElemOp op);

inline Tensor add(const Tensor& a, const Tensor& b) { return elementwise(a, b, ElemOp::Add); }
inline Tensor sub(const Tensor& a, const Tensor& b) { return elementwise(a, b, ElemOp::Sub); }
inline Tensor mul(const Tensor& a, const Tensor& b) { return elementwise(a, b, ElemOp::Mul); }

/// Uniform init on [-L, L] with L = sqrt(6 / (fan_in + fan_out)).
Tensor glorot_init(std::size_t fan_in, std::size_t fan_out,
                   std::vector<std::size_t> dims, Rng& rng);

}  // namespace dann

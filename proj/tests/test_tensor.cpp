#include <doctest.h>

#include <cmath>

#include "dann/errors.hpp"
#include "dann/tensor.hpp"

using namespace dann;

TEST_CASE("matmul by identity") {
  Tensor a({2, 2}, {1, 2, 3, 4});
  Tensor eye({2, 2}, {1, 0, 0, 1});
  Tensor c = matmul(a, eye);
  CHECK(c.data == std::vector<double>{1, 2, 3, 4});
}

TEST_CASE("matmul hand-expanded column") {
  Tensor a({2, 2}, {1, 2, 3, 4});
  Tensor b({2, 1}, {0, 1});
  Tensor c = matmul(a, b);
  CHECK(c.shape == std::vector<std::size_t>{2, 1});
  CHECK(c.data == std::vector<double>{2, 4});
}

TEST_CASE("matmul zero left operand") {
  Tensor a({1, 3});
  Tensor b({3, 2}, {1, -2, 3, 4, -5, 6});
  Tensor c = matmul(a, b);
  CHECK(c.shape == std::vector<std::size_t>{1, 2});
  CHECK(c.data == std::vector<double>{0, 0});
}

TEST_CASE("matmul rejects mismatched inner dims") {
  Tensor a({2, 3});
  Tensor b({2, 2});
  CHECK_THROWS_AS(matmul(a, b), DimensionError);
}

TEST_CASE("matmul does not mutate its inputs") {
  Tensor a({2, 2}, {1, 2, 3, 4});
  Tensor b({2, 2}, {5, 6, 7, 8});
  const auto a_copy = a.data;
  const auto b_copy = b.data;
  (void)matmul(a, b);
  CHECK(a.data == a_copy);
  CHECK(b.data == b_copy);
}

TEST_CASE("matmul associativity on random tensors") {
  Rng rng(7);
  std::uniform_real_distribution<double> dist(-1, 1);
  for (int trial = 0; trial < 5; ++trial) {
    Tensor a({3, 4}), b({4, 2}), c({2, 5});
    for (auto* t : {&a, &b, &c})
      for (double& v : t->data) v = dist(rng);
    Tensor lhs = matmul(matmul(a, b), c);
    Tensor rhs = matmul(a, matmul(b, c));
    for (std::size_t i = 0; i < lhs.numel(); ++i)
      CHECK(std::abs(lhs.data[i] - rhs.data[i]) < 1e-9);
  }
}

TEST_CASE("elementwise add/sub/mul") {
  Tensor a({2}, {1, 2});
  Tensor b({2}, {3, 4});
  CHECK(add(a, b).data == std::vector<double>{4, 6});
  CHECK(sub(a, a).data == std::vector<double>{0, 0});
  CHECK(mul(a, Tensor::zeros_like(a)).data == std::vector<double>{0, 0});
  CHECK_THROWS_AS(add(a, Tensor({3})), DimensionError);
}

TEST_CASE("glorot bound at fan 2+4 is exactly 1") {
  Rng rng(3);
  Tensor w = glorot_init(2, 4, {2, 4}, rng);
  for (double v : w.data) CHECK(std::abs(v) <= 1.0);
}

TEST_CASE("glorot is deterministic under a fixed seed") {
  Rng rng_a(42), rng_b(42);
  Tensor a = glorot_init(5, 7, {5, 7}, rng_a);
  Tensor b = glorot_init(5, 7, {5, 7}, rng_b);
  CHECK(a.data == b.data);
}

TEST_CASE("glorot stays inside the bound and centers on zero") {
  Rng rng(11);
  const std::size_t n = 100000;
  const double limit = std::sqrt(6.0 / 6.0);
  Tensor w = glorot_init(3, 3, {n}, rng);
  double sum = 0.0;
  for (double v : w.data) {
    CHECK(std::abs(v) <= limit);
    sum += v;
  }
  // uniform on [-1, 1]: sigma of the mean is 1/sqrt(3n)
  const double three_sigma = 3.0 / std::sqrt(3.0 * n);
  CHECK(std::abs(sum / n) < three_sigma);
}

TEST_CASE("glorot rejects non-positive fans") {
  Rng rng(1);
  CHECK_THROWS_AS(glorot_init(0, 3, {1}, rng), ArgumentError);
}

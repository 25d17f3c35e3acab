#include <doctest.h>

#include <cmath>

#include "rfd/errors.hpp"
#include "rfd/format.hpp"
#include "rfd/tensor.hpp"

using rfd::Tensor;

TEST_CASE("tensor shape must match data") {
  CHECK_THROWS_AS(Tensor({2, 2}, {1.0, 2.0, 3.0}), rfd::ShapeError);
  CHECK_THROWS_AS(Tensor::zeros({0}), rfd::ShapeError);
  CHECK(Tensor({2, 2}, {1.0, 2.0, 3.0, 4.0}).size() == 4);
}

TEST_CASE("tensor rejects non-finite entries") {
  CHECK_THROWS_AS(Tensor({NAN}), rfd::ShapeError);
  CHECK_THROWS_AS(Tensor({1.0, INFINITY}), rfd::ShapeError);
}

TEST_CASE("zeros builds the requested shape") {
  const Tensor t = Tensor::zeros({3});
  CHECK(t.shape() == std::vector<std::size_t>{3});
  CHECK(t == Tensor{0.0, 0.0, 0.0});
}

TEST_CASE("norms and arithmetic") {
  const Tensor a{3.0, -4.0};
  CHECK(rfd::norm_l2(a) == 5.0);
  CHECK(rfd::norm_linf(a) == 4.0);
  CHECK(rfd::dot(a, a) == 25.0);
  CHECK(a + a == Tensor{6.0, -8.0});
  CHECK(a - a == Tensor{0.0, 0.0});
  CHECK(2.0 * a == Tensor{6.0, -8.0});
  CHECK(rfd::clip(a, -1.0, 1.0) == Tensor{1.0, -1.0});
  CHECK_THROWS_AS(rfd::dot(a, Tensor{1.0}), rfd::ShapeError);
}

TEST_CASE("argmax prefers the lowest index on ties") {
  CHECK(rfd::argmax(Tensor{1.0, 3.0, 3.0}) == 1);
  CHECK(rfd::argmax(Tensor{5.0, 5.0}) == 0);
}

TEST_CASE("format_double round-trips") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.123456789}) {
    CHECK(std::stod(rfd::format_double(v)) == v);
  }
}

#include "rfd/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "rfd/errors.hpp"

namespace rfd {
namespace {

std::size_t element_count(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

void check_finite(const std::vector<double>& data) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!std::isfinite(data[i])) {
      throw ShapeError("tensor entry " + std::to_string(i) + " is not finite");
    }
  }
}

void require_same_size(const Tensor& a, const Tensor& b, const char* op) {
  if (a.size() != b.size()) {
    throw ShapeError(std::string(op) + ": size " + std::to_string(a.size()) +
                     " vs " + std::to_string(b.size()));
  }
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (std::find(shape_.begin(), shape_.end(), 0u) != shape_.end()) {
    throw ShapeError("tensor shape entries must be positive");
  }
  if (element_count(shape_) != data_.size()) {
    throw ShapeError("tensor shape holds " +
                     std::to_string(element_count(shape_)) +
                     " elements but data has " + std::to_string(data_.size()));
  }
  check_finite(data_);
}

Tensor::Tensor(std::initializer_list<double> values)
    : Tensor({values.size()}, std::vector<double>(values)) {}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
  if (std::find(shape.begin(), shape.end(), 0u) != shape.end()) {
    throw ShapeError("tensor shape entries must be positive");
  }
  const std::size_t n = element_count(shape);
  return Tensor(std::move(shape), std::vector<double>(n, 0.0));
}

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::filled(std::size_t n, double value) {
  return Tensor({n}, std::vector<double>(n, value));
}

double dot(const Tensor& a, const Tensor& b) {
  require_same_size(a, b, "dot");
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double norm_l2(const Tensor& t) { return std::sqrt(dot(t, t)); }

double norm_linf(const Tensor& t) {
  double m = 0.0;
  for (double v : t) m = std::max(m, std::abs(v));
  return m;
}

Tensor operator+(const Tensor& a, const Tensor& b) {
  require_same_size(a, b, "add");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

Tensor operator-(const Tensor& a, const Tensor& b) {
  require_same_size(a, b, "subtract");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  return out;
}

Tensor operator*(double s, const Tensor& t) {
  Tensor out = t;
  for (double& v : out) v *= s;
  return out;
}

std::size_t argmax(const Tensor& t) {
  if (t.empty()) throw ShapeError("argmax of an empty tensor");
  return static_cast<std::size_t>(
      std::distance(t.begin(), std::max_element(t.begin(), t.end())));
}

Tensor clip(const Tensor& t, double lo, double hi) {
  Tensor out = t;
  for (double& v : out) v = std::clamp(v, lo, hi);
  return out;
}

}  // namespace rfd

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace rfd {

/// Dense row-major array of 64-bit floats.
///
/// The element count always equals the product of the shape, and every entry
/// is finite at construction. Mutation through `data()`/`operator[]` is
/// allowed for in-place algorithms; callers are responsible for keeping the
/// values finite.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);
  /// A rank-1 tensor holding `values`.
  Tensor(std::initializer_list<double> values);

  /// A zero-filled tensor of the given shape.
  static Tensor zeros(std::vector<std::size_t> shape);
  static Tensor vector(std::vector<double> values);
  static Tensor filled(std::size_t n, double value);

  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }
  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

double dot(const Tensor& a, const Tensor& b);
double norm_l2(const Tensor& t);
double norm_linf(const Tensor& t);

Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator*(double s, const Tensor& t);

/// Index of the largest entry; ties resolve to the lowest index.
std::size_t argmax(const Tensor& t);

/// Elementwise clamp into [lo, hi].
Tensor clip(const Tensor& t, double lo, double hi);

}  // namespace rfd

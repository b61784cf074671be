#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace tempref::numcore {

/// Dense row-major array of doubles. Every operation in this library works on
/// rank-2 arrays; scalars are [1, 1].
class Array {
 public:
  Array() = default;
  explicit Array(std::vector<std::size_t> shape, double fill = 0.0);
  Array(std::size_t rows, std::size_t cols, double fill = 0.0);

  /// Builds a [rows, cols] array from row-major values.
  static Array from(std::size_t rows, std::size_t cols, std::vector<double> values);
  static Array from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Array scalar(double v) { return Array(1, 1, v); }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  double* ptr() { return data_.data(); }
  const double* ptr() const { return data_.data(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  void fill(double v);
  bool same_shape(const Array& other) const { return shape_ == other.shape_; }
  std::string shape_string() const;

  friend bool operator==(const Array&, const Array&) = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

std::string shape_string(const std::vector<std::size_t>& shape);

}  // namespace tempref::numcore

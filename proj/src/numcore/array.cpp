#include "tempref/numcore/array.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

#include "tempref/numcore/errors.hpp"

namespace tempref::numcore {

namespace {

std::size_t product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

Array::Array(std::vector<std::size_t> shape, double fill) : shape_(std::move(shape)) {
  if (shape_.empty()) throw DimensionError("array shape must have at least one dimension");
  for (auto d : shape_) {
    if (d == 0) throw DimensionError("array dimensions must be >= 1, got " + shape_string());
  }
  data_.assign(product(shape_), fill);
}

Array::Array(std::size_t rows, std::size_t cols, double fill)
    : Array(std::vector<std::size_t>{rows, cols}, fill) {}

Array Array::from(std::size_t rows, std::size_t cols, std::vector<double> values) {
  Array a(rows, cols);
  if (values.size() != a.size()) {
    throw DimensionError("expected " + std::to_string(a.size()) + " values for shape " +
                         a.shape_string() + ", got " + std::to_string(values.size()));
  }
  a.data_ = std::move(values);
  return a;
}

Array Array::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  if (rows.size() == 0) throw DimensionError("from_rows needs at least one row");
  const std::size_t cols = rows.begin()->size();
  std::vector<double> values;
  values.reserve(rows.size() * cols);
  for (const auto& r : rows) {
    if (r.size() != cols) throw DimensionError("ragged rows");
    values.insert(values.end(), r.begin(), r.end());
  }
  return from(rows.size(), cols, std::move(values));
}

std::size_t Array::rows() const {
  if (shape_.size() != 2) throw DimensionError("expected rank-2 array, got " + shape_string());
  return shape_[0];
}

std::size_t Array::cols() const {
  if (shape_.size() != 2) throw DimensionError("expected rank-2 array, got " + shape_string());
  return shape_[1];
}

void Array::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

std::string Array::shape_string() const { return numcore::shape_string(shape_); }

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

}  // namespace tempref::numcore

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace pprgo {

/// Row-major dense matrix; the element type picks 32-bit or 64-bit arithmetic.
template <typename T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T{0}) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  T& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  T operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<T> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

  std::span<T> flat() noexcept { return data_; }
  std::span<const T> flat() const noexcept { return data_; }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  template <typename U>
  Matrix<U> cast() const {
    Matrix<U> out(rows_, cols_);
    std::transform(data_.begin(), data_.end(), out.flat().begin(), [](T v) { return static_cast<U>(v); });
    return out;
  }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

/// Numerically stable in-place softmax of one row.
template <typename T>
void softmax_inplace(std::span<T> row) {
  if (row.empty()) return;
  const T mx = *std::max_element(row.begin(), row.end());
  T total = 0;
  for (T& v : row) total += (v = std::exp(v - mx));
  for (T& v : row) v /= total;
}

/// Index of the row maximum; ties go to the smallest index.
template <typename T>
std::size_t argmax(std::span<const T> row) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < row.size(); ++j)
    if (row[j] > row[best]) best = j;
  return best;
}

template <typename T>
T max_abs_diff(std::span<const T> a, std::span<const T> b) {
  T worst = 0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace pprgo

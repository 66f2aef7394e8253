// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "qkf/error.hpp"

namespace qkf {

/// Dense row-major real matrix. Feature tables, Gram and cross-kernel
/// matrices all use this layout.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return {};
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      require(rows[i].size() == m.cols_, ErrorKind::kDimension, "ragged rows");
      std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
    }
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  /// Rows `idx` restricted to columns `cols` (both in the given order).
  Matrix select(std::span<const std::size_t> idx, std::span<const std::size_t> cols) const {
    Matrix out(idx.size(), cols.size());
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = (*this)(idx[i], cols[j]);
    return out;
  }

  Matrix select_cols(std::span<const std::size_t> cols) const {
    Matrix out(rows_, cols.size());
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = (*this)(i, cols[j]);
    return out;
  }

  Matrix select_rows(std::span<const std::size_t> idx) const {
    Matrix out(idx.size(), cols_);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      auto src = row(idx[i]);
      std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
  }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

}  // namespace qkf

/* Copyright 2026 The PCPP Simulator Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef PCPP_TENSOR_H_
#define PCPP_TENSOR_H_

#include <cstddef>
#include <span>
#include <vector>

namespace pcpp {

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Standard product. Each output entry accumulates a(i,k)*b(k,j) for k in
// increasing order starting from 0.0, so results are reproducible bitwise.
Matrix matmul(const Matrix& a, const Matrix& b);

// Row-wise softmax with per-row max subtraction.
Matrix softmax_rows(const Matrix& m);

// An H x W x C activation grid, row-major with channels innermost. Token
// (r, c) of the grid is matrix row r*W + c when viewed as a token matrix.
class LatentTensor {
 public:
  LatentTensor() = default;
  LatentTensor(std::size_t height, std::size_t width, std::size_t channels,
               double fill = 0.0);
  LatentTensor(std::size_t height, std::size_t width, std::size_t channels,
               std::vector<double> data);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t channels() const { return channels_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  // Elements per grid row (W*C).
  std::size_t row_stride() const { return width_ * channels_; }

  double& at(std::size_t r, std::size_t c, std::size_t ch) {
    return data_[(r * width_ + c) * channels_ + ch];
  }
  double at(std::size_t r, std::size_t c, std::size_t ch) const {
    return data_[(r * width_ + c) * channels_ + ch];
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  // Copy of rows [begin, begin + count).
  LatentTensor rows(std::size_t begin, std::size_t count) const;
  // Overwrites rows [begin, begin + src.height()) with src.
  void set_rows(std::size_t begin, const LatentTensor& src);

  bool all_finite() const;

  friend bool operator==(const LatentTensor&, const LatentTensor&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::size_t channels_ = 0;
  std::vector<double> data_;
};

// Stacks tensors vertically; empty (zero-row) parts are skipped. All non-empty
// parts must share width and channel count.
LatentTensor concat_rows(std::span<const LatentTensor* const> parts);

// (H*W) x C view of the grid, one token per row.
Matrix to_tokens(const LatentTensor& x);
LatentTensor from_tokens(const Matrix& tokens, std::size_t height, std::size_t width);

void require_same_shape(const LatentTensor& a, const LatentTensor& b, const char* what);

double max_abs_diff(const LatentTensor& a, const LatentTensor& b);
double max_abs(const LatentTensor& x);

}  // namespace pcpp

#endif  // PCPP_TENSOR_H_

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

#include "pcpp/tensor.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "pcpp/error.h"

namespace pcpp {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("matrix data length " + std::to_string(data_.size()) +
                     " != " + std::to_string(rows) + "x" + std::to_string(cols));
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions " + std::to_string(a.cols()) +
                     " and " + std::to_string(b.rows()) + " disagree");
  }
  Matrix out(a.rows(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* dst = out.row(i).data();
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      const double* src = b.row(k).data();
      for (std::size_t j = 0; j < n; ++j) dst[j] += aik * src[j];
    }
  }
  return out;
}

Matrix softmax_rows(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto in = m.row(i);
    auto dst = out.row(i);
    if (in.empty()) continue;
    const double peak = *std::max_element(in.begin(), in.end());
    double total = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      dst[j] = std::exp(in[j] - peak);
      total += dst[j];
    }
    for (double& v : dst) v /= total;
  }
  return out;
}

LatentTensor::LatentTensor(std::size_t height, std::size_t width, std::size_t channels,
                           double fill)
    : height_(height), width_(width), channels_(channels),
      data_(height * width * channels, fill) {}

LatentTensor::LatentTensor(std::size_t height, std::size_t width, std::size_t channels,
                           std::vector<double> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
  if (data_.size() != height * width * channels) {
    throw ShapeError("latent data length " + std::to_string(data_.size()) +
                     " != H*W*C = " + std::to_string(height * width * channels));
  }
}

LatentTensor LatentTensor::rows(std::size_t begin, std::size_t count) const {
  if (begin + count > height_) {
    throw IndexError("row slice [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") exceeds height " +
                     std::to_string(height_));
  }
  const std::size_t stride = row_stride();
  std::vector<double> out(data_.begin() + static_cast<std::ptrdiff_t>(begin * stride),
                          data_.begin() + static_cast<std::ptrdiff_t>((begin + count) * stride));
  return LatentTensor(count, width_, channels_, std::move(out));
}

void LatentTensor::set_rows(std::size_t begin, const LatentTensor& src) {
  if (src.width() != width_ || src.channels() != channels_ ||
      begin + src.height() > height_) {
    throw ShapeError("set_rows: source does not fit");
  }
  std::copy(src.data_.begin(), src.data_.end(),
            data_.begin() + static_cast<std::ptrdiff_t>(begin * row_stride()));
}

bool LatentTensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

LatentTensor concat_rows(std::span<const LatentTensor* const> parts) {
  std::size_t height = 0, width = 0, channels = 0;
  bool have_shape = false;
  for (const LatentTensor* p : parts) {
    if (p == nullptr || p->height() == 0) continue;
    if (!have_shape) {
      width = p->width();
      channels = p->channels();
      have_shape = true;
    } else if (p->width() != width || p->channels() != channels) {
      throw ShapeError("concat_rows: width/channel mismatch");
    }
    height += p->height();
  }
  std::vector<double> data;
  data.reserve(height * width * channels);
  for (const LatentTensor* p : parts) {
    if (p == nullptr || p->height() == 0) continue;
    data.insert(data.end(), p->data().begin(), p->data().end());
  }
  return LatentTensor(height, width, channels, std::move(data));
}

Matrix to_tokens(const LatentTensor& x) {
  return Matrix(x.height() * x.width(), x.channels(),
                std::vector<double>(x.data().begin(), x.data().end()));
}

LatentTensor from_tokens(const Matrix& tokens, std::size_t height, std::size_t width) {
  if (tokens.rows() != height * width) {
    throw ShapeError("from_tokens: token count does not match grid");
  }
  return LatentTensor(height, width, tokens.cols(),
                      std::vector<double>(tokens.data().begin(), tokens.data().end()));
}

void require_same_shape(const LatentTensor& a, const LatentTensor& b, const char* what) {
  if (a.height() != b.height() || a.width() != b.width() || a.channels() != b.channels()) {
    throw ShapeError(std::string(what) + ": shape mismatch (" + std::to_string(a.height()) +
                     "x" + std::to_string(a.width()) + "x" + std::to_string(a.channels()) +
                     " vs " + std::to_string(b.height()) + "x" + std::to_string(b.width()) +
                     "x" + std::to_string(b.channels()) + ")");
  }
}

double max_abs_diff(const LatentTensor& a, const LatentTensor& b) {
  require_same_shape(a, b, "max_abs_diff");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
  }
  return worst;
}

double max_abs(const LatentTensor& x) {
  double worst = 0.0;
  for (double v : x.data()) worst = std::max(worst, std::abs(v));
  return worst;
}

}  // namespace pcpp

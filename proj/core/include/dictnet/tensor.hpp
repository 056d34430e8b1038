#pragma once

#include <cstddef>
#include <vector>

#include "dictnet/matrix.hpp"

namespace dictnet {

/// Dense 4-D array of doubles holding image batches and feature maps.
/// Layout: element (b, y, x, c) lives at ((b*H + y)*W + x)*C + c, i.e.
/// height varies slowest within an image, then width, then channel.
///
/// The same (height, width, channel) order is the project-wide filter
/// vectorization: a filter bank is a Matrix whose column f holds filter f
/// flattened as (y*FW + x)*C + c. One image of a Tensor4 flattened row-major
/// therefore is its own vectorization.
class Tensor4 {
 public:
  Tensor4() = default;
  Tensor4(std::size_t batch, std::size_t height, std::size_t width, std::size_t channels)
      : batch_(batch), height_(height), width_(width), channels_(channels),
        data_(batch * height * width * channels, 0.0) {}

  std::size_t batch() const { return batch_; }
  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t channels() const { return channels_; }
  std::size_t size() const { return data_.size(); }
  std::size_t image_size() const { return height_ * width_ * channels_; }

  double& at(std::size_t b, std::size_t y, std::size_t x, std::size_t c) {
    return data_[((b * height_ + y) * width_ + x) * channels_ + c];
  }
  const double& at(std::size_t b, std::size_t y, std::size_t x, std::size_t c) const {
    return data_[((b * height_ + y) * width_ + x) * channels_ + c];
  }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }

  bool all_finite() const;

  /// Flatten every image into a row: result is batch x (H*W*C).
  Matrix as_matrix() const;
  /// Inverse of as_matrix for a known image shape.
  static Tensor4 from_matrix(const Matrix& m, std::size_t height, std::size_t width,
                             std::size_t channels);

  /// New tensor holding the given images, in the given order.
  Tensor4 gather(const std::vector<std::size_t>& idx) const;

 private:
  std::size_t batch_ = 0, height_ = 0, width_ = 0, channels_ = 0;
  std::vector<double> data_;
};

/// Valid cross-correlation of an image batch with a filter bank at the
/// given stride. `filters` has one column per filter, rows = fh*fw*channels
/// in the project vectorization order. Output spatial size is
/// floor((in - filt)/stride) + 1 per axis; output channels = filter count.
Tensor4 correlate2d(const Tensor4& input, const Matrix& filters, std::size_t fh,
                    std::size_t fw, std::size_t stride);

/// Patch matrix for correlation-as-matmul: row (b, oy, ox) holds the input
/// window at that output position, vectorized. correlate2d(x, F) equals
/// im2col(x) * F up to reshaping.
Matrix im2col(const Tensor4& input, std::size_t fh, std::size_t fw, std::size_t stride);

/// Scatter-add the patch-matrix gradient back onto an input-shaped tensor;
/// adjoint of im2col.
Tensor4 col2im(const Matrix& cols, std::size_t batch, std::size_t height,
               std::size_t width, std::size_t channels, std::size_t fh, std::size_t fw,
               std::size_t stride);

}  // namespace dictnet

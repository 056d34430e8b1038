#include "dictnet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dictnet/error.hpp"

namespace dictnet {

bool Tensor4::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

Matrix Tensor4::as_matrix() const {
  Matrix m(batch_, image_size());
  std::copy(data_.begin(), data_.end(), m.raw().begin());
  return m;
}

Tensor4 Tensor4::from_matrix(const Matrix& m, std::size_t height, std::size_t width,
                             std::size_t channels) {
  if (m.cols() != height * width * channels)
    throw ShapeError("Tensor4::from_matrix: " + std::to_string(m.cols()) +
                     " columns cannot reshape to " + std::to_string(height) + "x" +
                     std::to_string(width) + "x" + std::to_string(channels));
  Tensor4 t(m.rows(), height, width, channels);
  std::copy(m.raw().begin(), m.raw().end(), t.raw().begin());
  return t;
}

Tensor4 Tensor4::gather(const std::vector<std::size_t>& idx) const {
  Tensor4 out(idx.size(), height_, width_, channels_);
  const std::size_t n = image_size();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= batch_) throw IndexError("Tensor4::gather: image index out of range");
    std::copy(data_.begin() + idx[i] * n, data_.begin() + (idx[i] + 1) * n,
              out.raw().begin() + i * n);
  }
  return out;
}

namespace {
void check_conv_shapes(const Tensor4& input, const Matrix& filters, std::size_t fh,
                       std::size_t fw, std::size_t stride) {
  if (stride == 0) throw ShapeError("correlate2d: stride must be >= 1");
  if (fh > input.height() || fw > input.width())
    throw ShapeError("correlate2d: filter extent exceeds input extent");
  if (filters.rows() != fh * fw * input.channels())
    throw ShapeError("correlate2d: filter rows " + std::to_string(filters.rows()) +
                     " != " + std::to_string(fh * fw * input.channels()) +
                     " (incompatible channel count?)");
}
}  // namespace

Matrix im2col(const Tensor4& input, std::size_t fh, std::size_t fw, std::size_t stride) {
  if (stride == 0) throw ShapeError("im2col: stride must be >= 1");
  if (fh > input.height() || fw > input.width())
    throw ShapeError("im2col: filter extent exceeds input extent");
  const std::size_t oh = (input.height() - fh) / stride + 1;
  const std::size_t ow = (input.width() - fw) / stride + 1;
  const std::size_t c = input.channels();
  Matrix cols(input.batch() * oh * ow, fh * fw * c);
  std::size_t r = 0;
  for (std::size_t b = 0; b < input.batch(); ++b)
    for (std::size_t oy = 0; oy < oh; ++oy)
      for (std::size_t ox = 0; ox < ow; ++ox, ++r) {
        double* dst = cols.row(r);
        for (std::size_t y = 0; y < fh; ++y) {
          const double* src = &input.at(b, oy * stride + y, ox * stride, 0);
          std::copy(src, src + fw * c, dst);
          dst += fw * c;
        }
      }
  return cols;
}

Tensor4 col2im(const Matrix& cols, std::size_t batch, std::size_t height,
               std::size_t width, std::size_t channels, std::size_t fh, std::size_t fw,
               std::size_t stride) {
  const std::size_t oh = (height - fh) / stride + 1;
  const std::size_t ow = (width - fw) / stride + 1;
  if (cols.rows() != batch * oh * ow || cols.cols() != fh * fw * channels)
    throw ShapeError("col2im: patch matrix shape does not match target");
  Tensor4 out(batch, height, width, channels);
  std::size_t r = 0;
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t oy = 0; oy < oh; ++oy)
      for (std::size_t ox = 0; ox < ow; ++ox, ++r) {
        const double* src = cols.row(r);
        for (std::size_t y = 0; y < fh; ++y) {
          double* dst = &out.at(b, oy * stride + y, ox * stride, 0);
          for (std::size_t k = 0; k < fw * channels; ++k) dst[k] += src[k];
          src += fw * channels;
        }
      }
  return out;
}

Tensor4 correlate2d(const Tensor4& input, const Matrix& filters, std::size_t fh,
                    std::size_t fw, std::size_t stride) {
  check_conv_shapes(input, filters, fh, fw, stride);
  const std::size_t oh = (input.height() - fh) / stride + 1;
  const std::size_t ow = (input.width() - fw) / stride + 1;
  const Matrix cols = im2col(input, fh, fw, stride);
  const Matrix out2d = matmul(cols, filters);
  // Row order of out2d is (b, oy, ox), so its buffer already is the
  // (batch, oh, ow, n_filters) layout.
  Tensor4 out(input.batch(), oh, ow, filters.cols());
  std::copy(out2d.raw().begin(), out2d.raw().end(), out.raw().begin());
  return out;
}

}  // namespace dictnet

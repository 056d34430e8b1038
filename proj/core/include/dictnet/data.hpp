#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dictnet/matrix.hpp"
#include "dictnet/tensor.hpp"

namespace dictnet {

/// An image classification dataset. Pixels are scaled to [0, 1]; images
/// keep their natural channel count (CIFAR stays RGB).
struct Dataset {
  Tensor4 images;
  std::vector<int> labels;
  std::size_t n_classes = 0;
  std::string source;
  std::uint64_t subset_seed = 0;

  std::size_t count() const { return images.batch(); }
};

/// IDX image file (magic 0x00000803, big-endian dims, unsigned bytes).
/// Throws FormatError with the offending byte offset.
Tensor4 load_idx_images(const std::string& path);
/// IDX label file (magic 0x00000801).
std::vector<int> load_idx_labels(const std::string& path);
/// Paired IDX image + label files (the MNIST layout).
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

/// CIFAR-10 binary format: 3073-byte records of a label byte followed by
/// 32x32 R, G, B planes (row-major within each plane). Channel order in the
/// resulting tensor is c=0:R, 1:G, 2:B.
Dataset load_cifar10(const std::string& path);

/// Deterministic subset of `count` examples (seeded shuffle, then prefix).
Dataset subset(const Dataset& ds, std::size_t count, std::uint64_t seed);

/// `count` patches sampled uniformly over (image, y, x), one vectorized
/// patch per row in the project (height, width, channel) order.
/// count == 0 yields an empty matrix with the correct column count.
Matrix extract_patches(const Dataset& ds, std::size_t patch, std::size_t count,
                       std::uint64_t seed);

/// Synthetic ground truth for smoothness experiments: unit-norm Gabor-like
/// filters on an h x w grid plus a pixel noise level.
struct SyntheticSmoothTask {
  std::uint64_t seed = 0;
  double noise_level = 0.0;
  std::size_t height = 0, width = 0;
  Matrix filters;  // (h*w) x n_filters, unit-norm columns
};
SyntheticSmoothTask make_smooth_task(std::size_t height, std::size_t width,
                                     std::size_t n_filters, double noise_level,
                                     std::uint64_t seed);

/// 28x28x1 ten-class digit glyphs (segment strokes with random affine
/// jitter, soft strokes and pixel noise). A stand-in classification task
/// with the MNIST tensor shape.
Dataset make_synthetic_digits(std::size_t count, std::uint64_t seed);

/// 32x32x3 ten-class color textures (oriented gratings x palettes) with
/// the CIFAR-10 tensor shape.
Dataset make_synthetic_textures(std::size_t count, std::uint64_t seed);

/// Spatially smooth random color images (low-frequency sinusoid mixtures)
/// for unsupervised patch experiments.
Tensor4 make_smooth_images(std::size_t count, std::size_t height, std::size_t width,
                           std::size_t channels, std::uint64_t seed);

}  // namespace dictnet

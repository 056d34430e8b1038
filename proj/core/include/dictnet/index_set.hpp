#pragma once

#include <cstdint>
#include <vector>

#include "dictnet/matrix.hpp"

namespace dictnet {

/// The domain a layer's per-feature weight vector is defined over: either a
/// flat index range or a 2-D pixel grid with channels. Grid coordinates map
/// to flat indices in the project vectorization order (y*W + x)*C + c.
struct WeightSpace {
  enum class Kind { Flat, Grid2d };

  Kind kind = Kind::Flat;
  std::size_t n = 0;                         // Flat
  std::size_t height = 0, width = 0, channels = 0;  // Grid2d

  static WeightSpace flat(std::size_t n);
  static WeightSpace grid2d(std::size_t height, std::size_t width, std::size_t channels);

  std::size_t size() const;
  std::size_t spatial_size() const;  // Flat: n; Grid2d: height*width

  /// Spatial coordinates of a flat index. Flat spaces are treated as a 1-D
  /// line (x = index, y = 0); grid spaces ignore nothing here, the channel
  /// is returned separately.
  void coords(std::size_t flat_index, double& x, double& y, std::size_t& channel) const;

  bool operator==(const WeightSpace& o) const = default;
};

/// An ordered set of distinct weight-space locations at which parameters
/// are learned explicitly; everything else is predicted.
struct IndexSet {
  WeightSpace space;
  std::vector<std::size_t> indices;  // distinct, each < space.size()

  std::size_t n_alpha() const { return indices.size(); }

  /// Throws if indices are out of range or duplicated.
  void validate() const;
};

/// A family alpha_1..alpha_J of index sets over one shared space; each
/// member backs one column of a layer.
struct ColumnFamily {
  std::vector<IndexSet> columns;

  std::size_t count() const { return columns.size(); }
};

/// Uniform sample of round(fraction * domain) locations without replacement,
/// deterministic in the seed, returned in ascending order. With
/// tie_channels on a grid space, spatial positions are sampled once and
/// replicated across all channels, so the (x, y) pattern is identical in
/// every channel. fraction must lie in (0, 1].
IndexSet sample_alpha(const WeightSpace& space, double fraction, std::uint64_t seed,
                      bool tie_channels);

/// J independent sample_alpha draws with per-column seeds derived from
/// `seed`; columns may overlap.
ColumnFamily make_columns(const WeightSpace& space, std::size_t j, double fraction,
                          std::uint64_t seed, bool tie_channels = true);

}  // namespace dictnet

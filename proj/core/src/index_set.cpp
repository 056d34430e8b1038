#include "dictnet/index_set.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dictnet/error.hpp"
#include "dictnet/rng.hpp"

namespace dictnet {

WeightSpace WeightSpace::flat(std::size_t n) {
  if (n == 0) throw ConfigError("WeightSpace::flat: size must be >= 1");
  WeightSpace s;
  s.kind = Kind::Flat;
  s.n = n;
  return s;
}

WeightSpace WeightSpace::grid2d(std::size_t height, std::size_t width,
                                std::size_t channels) {
  if (height == 0 || width == 0 || channels == 0)
    throw ConfigError("WeightSpace::grid2d: all extents must be >= 1");
  WeightSpace s;
  s.kind = Kind::Grid2d;
  s.height = height;
  s.width = width;
  s.channels = channels;
  return s;
}

std::size_t WeightSpace::size() const {
  return kind == Kind::Flat ? n : height * width * channels;
}

std::size_t WeightSpace::spatial_size() const {
  return kind == Kind::Flat ? n : height * width;
}

void WeightSpace::coords(std::size_t flat_index, double& x, double& y,
                         std::size_t& channel) const {
  if (flat_index >= size())
    throw IndexError("WeightSpace::coords: index " + std::to_string(flat_index) +
                     " out of range " + std::to_string(size()));
  if (kind == Kind::Flat) {
    x = static_cast<double>(flat_index);
    y = 0.0;
    channel = 0;
    return;
  }
  const std::size_t per_row = width * channels;
  const std::size_t yy = flat_index / per_row;
  const std::size_t rem = flat_index % per_row;
  x = static_cast<double>(rem / channels);
  y = static_cast<double>(yy);
  channel = rem % channels;
}

void IndexSet::validate() const {
  if (indices.empty()) throw ConfigError("IndexSet: empty index set");
  std::vector<std::size_t> sorted = indices;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i] >= space.size())
      throw IndexError("IndexSet: index " + std::to_string(sorted[i]) +
                       " out of range " + std::to_string(space.size()));
    if (i > 0 && sorted[i] == sorted[i - 1])
      throw ConfigError("IndexSet: duplicate index " + std::to_string(sorted[i]));
  }
}

namespace {
// First m elements of a seeded Fisher-Yates pass over [0, n), sorted.
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t m,
                                                    Rng& rng) {
  std::vector<std::size_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.next_below(n - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(m);
  std::sort(pool.begin(), pool.end());
  return pool;
}

std::size_t rounded_count(double fraction, std::size_t domain) {
  const auto r = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(domain)));
  return std::max<std::size_t>(1, std::min(r, domain));
}
}  // namespace

IndexSet sample_alpha(const WeightSpace& space, double fraction, std::uint64_t seed,
                      bool tie_channels) {
  if (!(fraction > 0.0) || fraction > 1.0)
    throw ConfigError("sample_alpha: fraction " + std::to_string(fraction) +
                      " outside (0, 1] would give a degenerate index set");
  Rng rng(derive_seed(seed, 0x616c706861ULL));  // "alpha"

  IndexSet out;
  out.space = space;
  if (space.kind == WeightSpace::Kind::Grid2d && tie_channels) {
    const std::size_t spatial = space.spatial_size();
    const std::size_t m = rounded_count(fraction, spatial);
    const auto positions = sample_without_replacement(spatial, m, rng);
    out.indices.reserve(m * space.channels);
    for (const std::size_t p : positions) {
      // p enumerates (y, x); expand across channels at that position.
      const std::size_t base = p * space.channels;
      for (std::size_t c = 0; c < space.channels; ++c) out.indices.push_back(base + c);
    }
  } else {
    const std::size_t m = rounded_count(fraction, space.size());
    out.indices = sample_without_replacement(space.size(), m, rng);
  }
  out.validate();
  return out;
}

ColumnFamily make_columns(const WeightSpace& space, std::size_t j, double fraction,
                          std::uint64_t seed, bool tie_channels) {
  if (j == 0) throw ConfigError("make_columns: column count must be >= 1");
  ColumnFamily fam;
  fam.columns.reserve(j);
  for (std::size_t c = 0; c < j; ++c)
    fam.columns.push_back(sample_alpha(space, fraction, derive_seed(seed, c), tie_channels));
  return fam;
}

}  // namespace dictnet

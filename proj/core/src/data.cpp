#include "dictnet/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "dictnet/error.hpp"
#include "dictnet/rng.hpp"

namespace dictnet {

namespace {
constexpr double kPi = 3.14159265358979323846;

std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'");
  in.seekg(0, std::ios::end);
  const auto size = in.tellg();
  in.seekg(0, std::ios::beg);
  std::vector<unsigned char> bytes(static_cast<std::size_t>(size));
  in.read(reinterpret_cast<char*>(bytes.data()), size);
  if (!in) throw FormatError("short read from '" + path + "'");
  return bytes;
}

std::uint32_t read_u32_be(const std::vector<unsigned char>& b, std::size_t at,
                          const std::string& path) {
  if (at + 4 > b.size())
    throw FormatError(path + ": truncated at byte offset " + std::to_string(at));
  return (std::uint32_t(b[at]) << 24) | (std::uint32_t(b[at + 1]) << 16) |
         (std::uint32_t(b[at + 2]) << 8) | std::uint32_t(b[at + 3]);
}
}  // namespace

Tensor4 load_idx_images(const std::string& path) {
  const auto bytes = read_file(path);
  const std::uint32_t magic = read_u32_be(bytes, 0, path);
  if (magic != 0x00000803u)
    throw FormatError(path + ": bad image magic 0x" + std::to_string(magic) +
                      " at byte offset 0 (expected 0x00000803)");
  const std::uint32_t count = read_u32_be(bytes, 4, path);
  const std::uint32_t rows = read_u32_be(bytes, 8, path);
  const std::uint32_t cols = read_u32_be(bytes, 12, path);
  const std::size_t expected = 16 + std::size_t(count) * rows * cols;
  if (bytes.size() < expected)
    throw FormatError(path + ": truncated at byte offset " + std::to_string(bytes.size()) +
                      " (need " + std::to_string(expected) + " bytes)");
  Tensor4 t(count, rows, cols, 1);
  for (std::size_t i = 0; i < std::size_t(count) * rows * cols; ++i)
    t.raw()[i] = static_cast<double>(bytes[16 + i]) / 255.0;
  return t;
}

std::vector<int> load_idx_labels(const std::string& path) {
  const auto bytes = read_file(path);
  const std::uint32_t magic = read_u32_be(bytes, 0, path);
  if (magic != 0x00000801u)
    throw FormatError(path + ": bad label magic 0x" + std::to_string(magic) +
                      " at byte offset 0 (expected 0x00000801)");
  const std::uint32_t count = read_u32_be(bytes, 4, path);
  if (bytes.size() < 8 + count)
    throw FormatError(path + ": truncated at byte offset " + std::to_string(bytes.size()) +
                      " (need " + std::to_string(8 + count) + " bytes)");
  std::vector<int> labels(count);
  for (std::uint32_t i = 0; i < count; ++i) labels[i] = bytes[8 + i];
  return labels;
}

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  Dataset ds;
  ds.images = load_idx_images(images_path);
  ds.labels = load_idx_labels(labels_path);
  if (ds.images.batch() != ds.labels.size())
    throw FormatError("IDX pair mismatch: " + std::to_string(ds.images.batch()) +
                      " images vs " + std::to_string(ds.labels.size()) + " labels");
  int maxl = 0;
  for (int l : ds.labels) maxl = std::max(maxl, l);
  ds.n_classes = static_cast<std::size_t>(maxl) + 1;
  ds.source = "idx:" + images_path;
  return ds;
}

Dataset load_cifar10(const std::string& path) {
  constexpr std::size_t kRecord = 3073;  // 1 label byte + 3*1024 pixels
  const auto bytes = read_file(path);
  if (bytes.empty() || bytes.size() % kRecord != 0)
    throw FormatError(path + ": size " + std::to_string(bytes.size()) +
                      " is not a multiple of " + std::to_string(kRecord));
  const std::size_t n = bytes.size() / kRecord;
  Dataset ds;
  ds.images = Tensor4(n, 32, 32, 3);
  ds.labels.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t base = r * kRecord;
    const int label = bytes[base];
    if (label > 9)
      throw FormatError(path + ": label " + std::to_string(label) + " out of range at byte offset " +
                        std::to_string(base));
    ds.labels[r] = label;
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t y = 0; y < 32; ++y)
        for (std::size_t x = 0; x < 32; ++x)
          ds.images.at(r, y, x, c) =
              static_cast<double>(bytes[base + 1 + c * 1024 + y * 32 + x]) / 255.0;
  }
  ds.n_classes = 10;
  ds.source = "cifar10:" + path;
  return ds;
}

Dataset subset(const Dataset& ds, std::size_t count, std::uint64_t seed) {
  if (count > ds.count())
    throw DataError("subset: requested " + std::to_string(count) + " of " +
                    std::to_string(ds.count()) + " examples");
  std::vector<std::size_t> idx(ds.count());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng(derive_seed(seed, 0x5b5e7ULL));
  rng.shuffle(idx);
  idx.resize(count);
  Dataset out;
  out.images = ds.images.gather(idx);
  out.labels.resize(count);
  for (std::size_t i = 0; i < count; ++i) out.labels[i] = ds.labels[idx[i]];
  out.n_classes = ds.n_classes;
  out.source = ds.source + "#subset" + std::to_string(count);
  out.subset_seed = seed;
  return out;
}

Matrix extract_patches(const Dataset& ds, std::size_t patch, std::size_t count,
                       std::uint64_t seed) {
  const auto& im = ds.images;
  if (patch == 0 || patch > im.height() || patch > im.width())
    throw ConfigError("extract_patches: patch size " + std::to_string(patch) +
                      " does not fit " + std::to_string(im.height()) + "x" +
                      std::to_string(im.width()) + " images");
  const std::size_t c = im.channels();
  Matrix out(count, patch * patch * c);
  Rng rng(derive_seed(seed, 0x9a7c8ULL));
  for (std::size_t r = 0; r < count; ++r) {
    const std::size_t b = static_cast<std::size_t>(rng.next_below(im.batch()));
    const std::size_t y0 = static_cast<std::size_t>(rng.next_below(im.height() - patch + 1));
    const std::size_t x0 = static_cast<std::size_t>(rng.next_below(im.width() - patch + 1));
    double* dst = out.row(r);
    for (std::size_t y = 0; y < patch; ++y) {
      const double* src = &im.at(b, y0 + y, x0, 0);
      std::copy(src, src + patch * c, dst);
      dst += patch * c;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic data

SyntheticSmoothTask make_smooth_task(std::size_t height, std::size_t width,
                                     std::size_t n_filters, double noise_level,
                                     std::uint64_t seed) {
  SyntheticSmoothTask task;
  task.seed = seed;
  task.noise_level = noise_level;
  task.height = height;
  task.width = width;
  task.filters = Matrix(height * width, n_filters);
  Rng rng(derive_seed(seed, 0x9ab0ULL));
  for (std::size_t f = 0; f < n_filters; ++f) {
    const double theta = rng.uniform(0.0, kPi);
    const double lambda = rng.uniform(0.35, 0.8) * static_cast<double>(std::min(height, width));
    const double sigma = 0.45 * lambda;
    const double phase = rng.uniform(0.0, 2.0 * kPi);
    const double cx = rng.uniform(0.3, 0.7) * static_cast<double>(width - 1);
    const double cy = rng.uniform(0.3, 0.7) * static_cast<double>(height - 1);
    double norm = 0.0;
    for (std::size_t y = 0; y < height; ++y)
      for (std::size_t x = 0; x < width; ++x) {
        const double dx = static_cast<double>(x) - cx;
        const double dy = static_cast<double>(y) - cy;
        const double xr = dx * std::cos(theta) + dy * std::sin(theta);
        const double yr = -dx * std::sin(theta) + dy * std::cos(theta);
        const double env = std::exp(-(xr * xr + 0.64 * yr * yr) / (2.0 * sigma * sigma));
        double v = env * std::cos(2.0 * kPi * xr / lambda + phase);
        if (noise_level > 0.0) v += noise_level * rng.normal();
        task.filters(y * width + x, f) = v;
        norm += v * v;
      }
    const double inv = 1.0 / std::sqrt(norm);
    for (std::size_t i = 0; i < height * width; ++i) task.filters(i, f) *= inv;
  }
  return task;
}

namespace {
// Soft line stroke: stamps a Gaussian profile along the segment.
void draw_stroke(Tensor4& im, std::size_t b, double x0, double y0, double x1, double y1,
                 double intensity, double thickness) {
  const double len = std::hypot(x1 - x0, y1 - y0);
  const int steps = std::max(2, static_cast<int>(len * 2.0));
  const double sig2 = 2.0 * thickness * thickness;
  for (int s = 0; s <= steps; ++s) {
    const double t = static_cast<double>(s) / steps;
    const double px = x0 + t * (x1 - x0);
    const double py = y0 + t * (y1 - y0);
    const int ylo = std::max(0, static_cast<int>(py) - 3);
    const int yhi = std::min(static_cast<int>(im.height()) - 1, static_cast<int>(py) + 3);
    const int xlo = std::max(0, static_cast<int>(px) - 3);
    const int xhi = std::min(static_cast<int>(im.width()) - 1, static_cast<int>(px) + 3);
    for (int y = ylo; y <= yhi; ++y)
      for (int x = xlo; x <= xhi; ++x) {
        const double d2 = (x - px) * (x - px) + (y - py) * (y - py);
        const double v = intensity * std::exp(-d2 / sig2);
        double& px_ref = im.at(b, y, x, 0);
        px_ref = std::max(px_ref, v);
      }
  }
}
}  // namespace

Dataset make_synthetic_digits(std::size_t count, std::uint64_t seed) {
  // Seven-segment glyphs: corners of the digit box, segments A..G.
  //      A
  //    F   B
  //      G
  //    E   C
  //      D
  static const int kSegments[10] = {
      0b1111110,  // 0: ABCDEF
      0b0110000,  // 1: BC
      0b1101101,  // 2: ABDEG
      0b1111001,  // 3: ABCDG
      0b0110011,  // 4: BCFG
      0b1011011,  // 5: ACDFG
      0b1011111,  // 6: ACDEFG
      0b1110000,  // 7: ABC
      0b1111111,  // 8
      0b1111011,  // 9: ABCDFG
  };
  Dataset ds;
  ds.images = Tensor4(count, 28, 28, 1);
  ds.labels.resize(count);
  ds.n_classes = 10;
  ds.source = "synth_digits";
  Rng rng(derive_seed(seed, 0xd1617ULL));
  for (std::size_t i = 0; i < count; ++i) {
    const int digit = static_cast<int>(rng.next_below(10));
    ds.labels[i] = digit;

    const double angle = rng.uniform(-0.35, 0.35);
    const double scale = rng.uniform(0.6, 1.15);
    const double tx = rng.uniform(-3.5, 3.5);
    const double ty = rng.uniform(-3.5, 3.5);
    const double intensity = rng.uniform(0.55, 1.0);
    const double thickness = rng.uniform(0.8, 1.7);
    const double ca = std::cos(angle), sa = std::sin(angle);
    const auto map = [&](double x, double y, double& ox, double& oy) {
      const double dx = (x - 14.0) * scale, dy = (y - 14.0) * scale;
      ox = 14.0 + ca * dx - sa * dy + tx;
      oy = 14.0 + sa * dx + ca * dy + ty;
    };
    // Digit box corners before jitter.
    const double xl = 9.0, xr = 19.0, yt = 6.0, ym = 14.0, yb = 22.0;
    const double pts[7][4] = {
        {xl, yt, xr, yt},  // A
        {xr, yt, xr, ym},  // B
        {xr, ym, xr, yb},  // C
        {xl, yb, xr, yb},  // D
        {xl, ym, xl, yb},  // E
        {xl, yt, xl, ym},  // F
        {xl, ym, xr, ym},  // G
    };
    for (int s = 0; s < 7; ++s) {
      if (!(kSegments[digit] & (1 << (6 - s)))) continue;
      double x0, y0, x1, y1;
      map(pts[s][0], pts[s][1], x0, y0);
      map(pts[s][2], pts[s][3], x1, y1);
      draw_stroke(ds.images, i, x0, y0, x1, y1, intensity, thickness);
    }
    // Clutter: a couple of short distractor strokes.
    const std::size_t clutter = 1 + rng.next_below(2);
    for (std::size_t k = 0; k < clutter; ++k) {
      const double cx = rng.uniform(2.0, 26.0), cy = rng.uniform(2.0, 26.0);
      const double dx = rng.uniform(-4.0, 4.0), dy = rng.uniform(-4.0, 4.0);
      draw_stroke(ds.images, i, cx, cy, cx + dx, cy + dy, rng.uniform(0.25, 0.55),
                  rng.uniform(0.7, 1.2));
    }
    for (std::size_t p = 0; p < 28 * 28; ++p) {
      double& v = ds.images.raw()[i * 28 * 28 + p];
      v = std::clamp(v + 0.12 * rng.normal(), 0.0, 1.0);
    }
  }
  return ds;
}

Dataset make_synthetic_textures(std::size_t count, std::uint64_t seed) {
  // Ten classes: five grating orientations x two color palettes.
  static const double kPalette[2][2][3] = {
      {{0.9, 0.2, 0.15}, {0.1, 0.25, 0.85}},  // red vs blue
      {{0.15, 0.8, 0.25}, {0.85, 0.75, 0.1}},  // green vs yellow
  };
  Dataset ds;
  ds.images = Tensor4(count, 32, 32, 3);
  ds.labels.resize(count);
  ds.n_classes = 10;
  ds.source = "synth_textures";
  Rng rng(derive_seed(seed, 0x7e87ULL));
  for (std::size_t i = 0; i < count; ++i) {
    const int cls = static_cast<int>(rng.next_below(10));
    ds.labels[i] = cls;
    const int orient = cls % 5;
    const int pal = cls / 5;
    const double theta = orient * kPi / 5.0 + rng.uniform(-0.26, 0.26);
    const double freq = 2.6 + rng.uniform(-0.9, 0.9);
    const double phase = rng.uniform(0.0, 2.0 * kPi);
    // Smooth illumination gradient over the image.
    const double gx = rng.uniform(-0.25, 0.25), gy = rng.uniform(-0.25, 0.25);
    const double ct = std::cos(theta), st = std::sin(theta);
    for (std::size_t y = 0; y < 32; ++y)
      for (std::size_t x = 0; x < 32; ++x) {
        const double u = (ct * x + st * y) / 32.0;
        const double g = 0.5 + 0.5 * std::sin(2.0 * kPi * freq * u + phase);
        const double light = gx * (x / 31.0 - 0.5) + gy * (y / 31.0 - 0.5);
        for (std::size_t c = 0; c < 3; ++c) {
          double v = kPalette[pal][0][c] * g + kPalette[pal][1][c] * (1.0 - g);
          v += light + 0.30 * rng.normal();
          ds.images.at(i, y, x, c) = std::clamp(v, 0.0, 1.0);
        }
      }
    // A gray occlusion block hides part of the pattern.
    const std::size_t bs = 4 + rng.next_below(7);
    const std::size_t by = rng.next_below(32 - bs), bx = rng.next_below(32 - bs);
    for (std::size_t y = by; y < by + bs; ++y)
      for (std::size_t x = bx; x < bx + bs; ++x)
        for (std::size_t c = 0; c < 3; ++c)
          ds.images.at(i, y, x, c) = std::clamp(0.5 + 0.1 * rng.normal(), 0.0, 1.0);
  }
  return ds;
}

Tensor4 make_smooth_images(std::size_t count, std::size_t height, std::size_t width,
                           std::size_t channels, std::uint64_t seed) {
  Tensor4 out(count, height, width, channels);
  Rng rng(derive_seed(seed, 0x500f ^ 0xffULL));
  const int waves = 6;
  for (std::size_t i = 0; i < count; ++i) {
    for (int k = 0; k < waves; ++k) {
      const double theta = rng.uniform(0.0, kPi);
      const double freq = rng.uniform(0.5, 3.0);
      const double phase = rng.uniform(0.0, 2.0 * kPi);
      const double amp = rng.uniform(0.25, 1.0) / waves;
      double camp[4];
      for (std::size_t c = 0; c < channels; ++c) camp[c % 4] = amp * rng.uniform(0.4, 1.0);
      const double ct = std::cos(theta), st = std::sin(theta);
      for (std::size_t y = 0; y < height; ++y)
        for (std::size_t x = 0; x < width; ++x) {
          const double u = (ct * x + st * y) / static_cast<double>(std::max(height, width));
          const double s = std::sin(2.0 * kPi * freq * u + phase);
          for (std::size_t c = 0; c < channels; ++c)
            out.at(i, y, x, c) += camp[c % 4] * s;
        }
    }
    // Rescale this image to [0, 1].
    double lo = out.at(i, 0, 0, 0), hi = lo;
    for (std::size_t p = 0; p < out.image_size(); ++p) {
      const double v = out.raw()[i * out.image_size() + p];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const double span = hi > lo ? hi - lo : 1.0;
    for (std::size_t p = 0; p < out.image_size(); ++p) {
      double& v = out.raw()[i * out.image_size() + p];
      v = (v - lo) / span;
    }
  }
  return out;
}

}  // namespace dictnet

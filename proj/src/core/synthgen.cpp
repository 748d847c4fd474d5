/* Copyright 2026 The JNR Authors. All Rights Reserved.

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

#include "jnr/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <string>

#include "byte_io.hpp"
#include "jnr/error.hpp"

namespace jnr {
namespace {

constexpr int kGlyphW = 5;
constexpr int kGlyphH = 7;

// 5x7 bitmap digits, one row per byte, bit 4 = leftmost column.
constexpr std::uint8_t kGlyphs[10][kGlyphH] = {
    {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E},  // 0
    {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E},  // 1
    {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F},  // 2
    {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E},  // 3
    {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02},  // 4
    {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E},  // 5
    {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E},  // 6
    {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08},  // 7
    {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E},  // 8
    {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C},  // 9
};

bool glyph_on(int digit, int gx, int gy) {
  return (kGlyphs[digit][gy] >> (kGlyphW - 1 - gx)) & 1;
}

struct Rect {
  int x0, y0, w, h;
};

// Float canvas, HWC.
class Canvas {
 public:
  explicit Canvas(const ImageDims& d)
      : d_(d), v_(d.pixel_count(), 0.0) {}

  void fill(const Rect& r, std::span<const double> color) {
    const int x1 = std::min(d_.width, r.x0 + r.w);
    const int y1 = std::min(d_.height, r.y0 + r.h);
    for (int y = std::max(0, r.y0); y < y1; ++y)
      for (int x = std::max(0, r.x0); x < x1; ++x) set(x, y, color);
  }

  void set(int x, int y, std::span<const double> color) {
    if (x < 0 || y < 0 || x >= d_.width || y >= d_.height) return;
    double* px = &v_[(static_cast<std::size_t>(y) * d_.width + x) * d_.channels];
    for (int c = 0; c < d_.channels; ++c) px[c] = color[c];
  }

  // Draws a glyph stretched to box (w x h) by nearest neighbour.
  void glyph(int digit, const Rect& box, std::span<const double> color) {
    for (int y = 0; y < box.h; ++y) {
      const int gy = y * kGlyphH / box.h;
      for (int x = 0; x < box.w; ++x) {
        const int gx = x * kGlyphW / box.w;
        if (glyph_on(digit, gx, gy)) set(box.x0 + x, box.y0 + y, color);
      }
    }
  }

  void gaussian_blur(double sigma) {
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    if (radius < 1) return;
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
      k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
      sum += k[i + radius];
    }
    for (double& w : k) w /= sum;
    const int W = d_.width, H = d_.height, C = d_.channels;
    std::vector<double> tmp(v_.size(), 0.0);
    auto at = [&](const std::vector<double>& b, int x, int y, int c) {
      x = std::clamp(x, 0, W - 1);
      y = std::clamp(y, 0, H - 1);
      return b[(static_cast<std::size_t>(y) * W + x) * C + c];
    };
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x)
        for (int c = 0; c < C; ++c) {
          double acc = 0.0;
          for (int i = -radius; i <= radius; ++i) acc += k[i + radius] * at(v_, x + i, y, c);
          tmp[(static_cast<std::size_t>(y) * W + x) * C + c] = acc;
        }
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x)
        for (int c = 0; c < C; ++c) {
          double acc = 0.0;
          for (int i = -radius; i <= radius; ++i) acc += k[i + radius] * at(tmp, x, y + i, c);
          v_[(static_cast<std::size_t>(y) * W + x) * C + c] = acc;
        }
  }

  void add_noise(double stddev, Rng& rng) {
    for (double& v : v_) v += stddev * rng.normal();
  }

  std::vector<std::uint8_t> quantize() const {
    std::vector<std::uint8_t> out(v_.size());
    for (std::size_t i = 0; i < v_.size(); ++i) {
      out[i] = static_cast<std::uint8_t>(std::clamp(std::lround(v_[i]), 0L, 255L));
    }
    return out;
  }

 private:
  ImageDims d_;
  std::vector<double> v_;
};

std::vector<double> random_color(int channels, Rng& rng, double lo, double hi) {
  std::vector<double> c(channels);
  for (double& v : c) v = std::floor(rng.uniform(lo, hi));
  return c;
}

int jitter(Rng& rng, int amount) {
  return static_cast<int>(rng.below(2 * amount + 1)) - amount;
}

float draw_orientation(const GenConfig& config, int number, Rng& rng) {
  double lo = 0.0, hi = 360.0;
  const bool restrict = config.balance_visibility && number != kInvisibleNumber;
  if (restrict) {
    // -cos(t) > c  <=>  t in (acos(-c), 360 - acos(-c)).
    lo = std::acos(-config.visibility_threshold) * 180.0 / std::numbers::pi;
    hi = 360.0 - lo;
  }
  for (;;) {
    auto deg = static_cast<float>(rng.uniform(lo, hi));
    if (deg >= 360.0f) deg = std::nextafter(360.0f, 0.0f);
    if (!restrict || visibility(deg) > config.visibility_threshold) return deg;
  }
}

void check_fraction(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw DomainError(std::string(name) + " must lie in [0, 1], got " +
                      std::to_string(v));
  }
}

}  // namespace

void GenConfig::validate() const {
  if (n_total < 1) throw DomainError("n_total must be positive");
  double sum = 0.0;
  for (double f : split_fractions) {
    check_fraction(f, "split fraction");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw DomainError("split fractions must sum to 1, got " + std::to_string(sum));
  }
  check_fraction(class_skew, "class_skew");
  check_fraction(occlusion_prob, "occlusion_prob");
  if (!(blur_sigma_max >= 0.0 && std::isfinite(blur_sigma_max)))
    throw DomainError("blur_sigma_max must be >= 0");
  if (!(noise_std >= 0.0 && std::isfinite(noise_std)))
    throw DomainError("noise_std must be >= 0");
  if (!(visibility_threshold > 0.0 && visibility_threshold < 1.0))
    throw DomainError("visibility_threshold must lie in (0, 1)");
  if (dims.height < 16 || dims.width < 16 || dims.channels < 1 ||
      dims.height > 65535 || dims.width > 65535 || dims.channels > 65535) {
    throw DomainError("image dims must be at least 16x16x1 and fit in u16");
  }
}

ImageSample Dataset::sample(std::size_t i) const {
  auto px = pixels(i);
  return {std::vector<std::uint8_t>(px.begin(), px.end()), labels_[i],
          orientations_[i]};
}

void Dataset::reserve(std::size_t n) {
  labels_.reserve(n);
  orientations_.reserve(n);
  pixels_.reserve(n * dims_.pixel_count());
}

void Dataset::push_back(const ImageSample& s) {
  if (s.pixels.size() != dims_.pixel_count()) {
    throw DomainError("sample has " + std::to_string(s.pixels.size()) +
                      " pixels, dataset expects " +
                      std::to_string(dims_.pixel_count()));
  }
  labels_.push_back(s.labels);
  orientations_.push_back(s.orientation);
  pixels_.insert(pixels_.end(), s.pixels.begin(), s.pixels.end());
}

double visibility(double degrees) {
  return std::max(0.0, -std::cos(degrees * std::numbers::pi / 180.0));
}

int draw_number(const GenConfig& config, Rng& rng) {
  if (rng.uniform() < config.class_skew) {
    // Popular numbers 0-59 and "invisible" weigh 3, rare 60-99 weigh 1.
    constexpr std::uint64_t kTotal = 60 * 3 + 40 * 1 + 3;
    std::uint64_t r = rng.below(kTotal);
    if (r < 180) return static_cast<int>(r / 3);
    r -= 180;
    if (r < 40) return 60 + static_cast<int>(r);
    return kInvisibleNumber;
  }
  return static_cast<int>(rng.below(kHolisticClasses));
}

ImageSample render_sample(int number, float orientation,
                          const GenConfig& config, Rng& rng) {
  const LabelSet requested = labels_from_number(number);
  const ImageDims& d = config.dims;
  const int W = d.width, H = d.height, C = d.channels;
  const double vis = visibility(orientation);
  const bool visible = number != kInvisibleNumber && vis > config.visibility_threshold;

  Canvas canvas(d);
  const auto field = random_color(C, rng, 0.0, 256.0);
  canvas.fill({0, 0, W, H}, field);

  const int tx0 = static_cast<int>(std::lround(W * 0.12)) + jitter(rng, 2);
  const int tx1 = static_cast<int>(std::lround(W * 0.88)) + jitter(rng, 2);
  const int ty0 = static_cast<int>(std::lround(H * 0.08)) + jitter(rng, 2);
  const auto torso = random_color(C, rng, 0.0, 256.0);
  canvas.fill({tx0, ty0, tx1 - tx0, H - ty0}, torso);

  double torso_mean = 0.0;
  for (double v : torso) torso_mean += v / C;
  const auto ink = torso_mean > 128.0 ? random_color(C, rng, 0.0, 60.0)
                                      : random_color(C, rng, 196.0, 256.0);

  // Glyph geometry: nominal scale, compressed horizontally by visibility.
  const int scale = std::max(1, std::min(W, H) / 20);
  const double squeeze = visible ? vis : 1.0;
  const int gw = std::max(1, static_cast<int>(std::lround(kGlyphW * scale * squeeze)));
  const int gh = kGlyphH * scale;
  const int gap = static_cast<int>(std::lround(scale * squeeze));
  const int n_digits = visible ? requested.count : 2;
  const int block_w = n_digits == 2 ? 2 * gw + gap : gw;
  const int cx = (tx0 + tx1) / 2 + jitter(rng, 2);
  const int top = ty0 + (H - ty0 - gh) / 2 + jitter(rng, 2);
  const Rect region{cx - block_w / 2, top, block_w, gh};

  if (visible) {
    if (n_digits == 2) {
      canvas.glyph(requested.tens, {region.x0, top, gw, gh}, ink);
      canvas.glyph(requested.ones, {region.x0 + gw + gap, top, gw, gh}, ink);
    } else {
      canvas.glyph(requested.ones, {region.x0, top, gw, gh}, ink);
    }
  }

  if (rng.uniform() < config.occlusion_prob) {
    // Each side at most 63% of the region: area <= 0.397 of the region.
    const int ow = std::max(1, static_cast<int>(region.w * rng.uniform(0.2, 0.63)));
    const int oh = std::max(1, static_cast<int>(region.h * rng.uniform(0.2, 0.63)));
    const int ox = region.x0 + static_cast<int>(rng.below(region.w - ow + 1));
    const int oy = region.y0 + static_cast<int>(rng.below(region.h - oh + 1));
    canvas.fill({ox, oy, ow, oh}, random_color(C, rng, 0.0, 256.0));
  }

  const double sigma = rng.uniform(0.0, config.blur_sigma_max);
  if (sigma > 0.0) canvas.gaussian_blur(sigma);
  if (config.noise_std > 0.0) canvas.add_noise(config.noise_std, rng);

  return {canvas.quantize(), visible ? requested : LabelSet{}, orientation};
}

std::array<std::size_t, 3> split_sizes(int n_total,
                                       const std::array<double, 3>& fractions) {
  const auto n = static_cast<std::size_t>(n_total);
  const auto val = static_cast<std::size_t>(std::llround(n_total * fractions[1]));
  const auto test = static_cast<std::size_t>(std::llround(n_total * fractions[2]));
  if (val + test > n) throw DomainError("split fractions exceed n_total");
  return {n - val - test, val, test};
}

SplitDatasets generate_dataset(const GenConfig& config, std::uint64_t seed) {
  config.validate();
  if (config.n_total < 10) throw DomainError("n_total must be at least 10");
  const auto sizes = split_sizes(config.n_total, config.split_fractions);

  SplitDatasets out{Dataset(config.dims), Dataset(config.dims), Dataset(config.dims)};
  out.train.reserve(sizes[0]);
  out.val.reserve(sizes[1]);
  out.test.reserve(sizes[2]);
  for (std::size_t i = 0; i < static_cast<std::size_t>(config.n_total); ++i) {
    Rng rng(mix_seed(seed, i));
    const int number = draw_number(config, rng);
    const float orientation = draw_orientation(config, number, rng);
    ImageSample s = render_sample(number, orientation, config, rng);
    Dataset& target = i < sizes[0]              ? out.train
                      : i < sizes[0] + sizes[1] ? out.val
                                                : out.test;
    target.push_back(s);
  }
  return out;
}

std::vector<std::uint8_t> encode_dataset(const Dataset& d) {
  const ImageDims& dims = d.dims();
  std::vector<std::uint8_t> out;
  out.reserve(kDatasetHeaderBytes + d.size() * (kSampleHeaderBytes + dims.pixel_count()));
  detail::ByteWriter w(out);
  w.bytes(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>("JNRD"), 4));
  w.u16(kDatasetFormatVersion);
  w.u16(static_cast<std::uint16_t>(dims.height));
  w.u16(static_cast<std::uint16_t>(dims.width));
  w.u16(static_cast<std::uint16_t>(dims.channels));
  w.u32(static_cast<std::uint32_t>(d.size()));
  for (std::size_t i = 0; i < d.size(); ++i) {
    const LabelSet& l = d.labels(i);
    w.u8(static_cast<std::uint8_t>(l.holistic));
    w.u8(static_cast<std::uint8_t>(l.tens));
    w.u8(static_cast<std::uint8_t>(l.ones));
    w.u8(static_cast<std::uint8_t>(l.count));
    w.f32(d.orientation(i));
    w.bytes(d.pixels(i));
  }
  return out;
}

Dataset decode_dataset(std::span<const std::uint8_t> bytes) {
  using R = FormatError::Reason;
  detail::ByteReader r(bytes, "dataset");
  auto magic = r.bytes(4);
  if (std::memcmp(magic.data(), "JNRD", 4) != 0)
    throw FormatError(R::kBadMagic, "dataset: bad magic (expected JNRD)");
  const std::uint16_t version = r.u16();
  if (version != kDatasetFormatVersion) {
    throw FormatError(R::kVersionMismatch,
                      "dataset: unsupported format version " + std::to_string(version));
  }
  ImageDims dims;
  dims.height = r.u16();
  dims.width = r.u16();
  dims.channels = r.u16();
  const std::uint32_t count = r.u32();
  if (dims.pixel_count() == 0)
    throw FormatError(R::kInvalidSample, "dataset: zero image dimension");

  const std::size_t per_sample = kSampleHeaderBytes + dims.pixel_count();
  r.need(per_sample * count);
  if (r.remaining() > per_sample * count)
    throw FormatError(R::kTrailingData, "dataset: trailing bytes after last sample");

  Dataset d(dims);
  d.reserve(count);
  ImageSample s;
  for (std::uint32_t i = 0; i < count; ++i) {
    s.labels.holistic = r.u8();
    s.labels.tens = r.u8();
    s.labels.ones = r.u8();
    s.labels.count = r.u8();
    if (!is_consistent(s.labels))
      throw FormatError(R::kInvalidLabels,
                        "dataset: inconsistent labels in sample " + std::to_string(i));
    s.orientation = r.f32();
    if (!(s.orientation >= 0.0f && s.orientation < 360.0f))
      throw FormatError(R::kInvalidSample,
                        "dataset: orientation out of range in sample " + std::to_string(i));
    auto px = r.bytes(dims.pixel_count());
    s.pixels.assign(px.begin(), px.end());
    d.push_back(s);
  }
  return d;
}

void serialize_dataset(const Dataset& d, const std::filesystem::path& path) {
  detail::write_file(path, encode_dataset(d));
}

Dataset parse_dataset(const std::filesystem::path& path) {
  try {
    return decode_dataset(detail::read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(e.reason(), path.string() + ": " + e.what());
  }
}

void write_manifest_csv(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << "index,holistic,tens,ones,count,orientation_deg\n";
  char buf[160];
  for (std::size_t i = 0; i < d.size(); ++i) {
    const LabelSet& l = d.labels(i);
    std::snprintf(buf, sizeof buf, "%zu,%d,%d,%d,%d,%.9g\n", i, l.holistic,
                  l.tens, l.ones, l.count, static_cast<double>(d.orientation(i)));
    out << buf;
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace jnr

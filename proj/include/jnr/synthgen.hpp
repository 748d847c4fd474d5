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

// Synthetic jersey crops and the JNRD dataset file format.
//
// JNRD layout (all integers little-endian):
//
//   offset  size  field
//   0       4     magic "JNRD"
//   4       2     format version (1)
//   6       2     height
//   8       2     width
//   10      2     channels
//   12      4     sample count
//   16      ...   samples, each:
//                   u8 holistic, u8 tens, u8 ones, u8 count,
//                   f32 orientation in degrees (IEEE-754),
//                   height*width*channels pixel bytes, row-major HWC
//
// Split name and seed are not stored; they travel with the file name.

#ifndef JNR_SYNTHGEN_HPP_
#define JNR_SYNTHGEN_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "jnr/labels.hpp"
#include "jnr/rng.hpp"

namespace jnr {

inline constexpr std::uint16_t kDatasetFormatVersion = 1;
inline constexpr std::size_t kDatasetHeaderBytes = 16;
inline constexpr std::size_t kSampleHeaderBytes = 8;

struct ImageDims {
  int height = 64;
  int width = 64;
  int channels = 3;

  std::size_t pixel_count() const {
    return static_cast<std::size_t>(height) * width * channels;
  }
  friend bool operator==(const ImageDims&, const ImageDims&) = default;
};

struct GenConfig {
  int n_total = 1000;
  std::array<double, 3> split_fractions{0.77, 0.145, 0.085};
  // 0 = uniform over the 101 classes, 1 = popularity-skewed.
  double class_skew = 0.5;
  double blur_sigma_max = 1.0;
  double noise_std = 6.0;
  double occlusion_prob = 0.1;
  double visibility_threshold = 0.10;
  // Draw the orientation of every visible number from inside the
  // visibility window, so holistic labels follow the number sampler
  // exactly. Used for class-balanced evaluation sets.
  bool balance_visibility = false;
  ImageDims dims;

  // Throws DomainError.
  void validate() const;
};

struct ImageSample {
  std::vector<std::uint8_t> pixels;
  LabelSet labels;
  float orientation = 0.0f;
};

// Samples stored contiguously; all share one ImageDims.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(ImageDims dims) : dims_(dims) {}

  const ImageDims& dims() const { return dims_; }
  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }

  const LabelSet& labels(std::size_t i) const { return labels_[i]; }
  float orientation(std::size_t i) const { return orientations_[i]; }
  std::span<const std::uint8_t> pixels(std::size_t i) const {
    return {pixels_.data() + i * dims_.pixel_count(), dims_.pixel_count()};
  }
  ImageSample sample(std::size_t i) const;

  void reserve(std::size_t n);
  // Throws DomainError on a pixel-count mismatch.
  void push_back(const ImageSample& s);

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  ImageDims dims_;
  std::vector<LabelSet> labels_;
  std::vector<float> orientations_;
  std::vector<std::uint8_t> pixels_;
};

struct SplitDatasets {
  Dataset train;
  Dataset val;
  Dataset test;
};

// max(0, -cos(orientation)): 1 with the back square to the camera (180),
// 0 for any front-facing angle.
double visibility(double degrees);

// Number in [0, 100] drawn from the uniform/skewed mixture.
int draw_number(const GenConfig& config, Rng& rng);

ImageSample render_sample(int number, float orientation,
                          const GenConfig& config, Rng& rng);

// (train, val, test) sizes; val and test are rounded, train takes the rest.
std::array<std::size_t, 3> split_sizes(int n_total,
                                       const std::array<double, 3>& fractions);

// Throws DomainError for an invalid config or n_total < 10.
SplitDatasets generate_dataset(const GenConfig& config, std::uint64_t seed);

std::vector<std::uint8_t> encode_dataset(const Dataset& d);
// Throws FormatError with a reason per failure class.
Dataset decode_dataset(std::span<const std::uint8_t> bytes);

void serialize_dataset(const Dataset& d, const std::filesystem::path& path);
Dataset parse_dataset(const std::filesystem::path& path);

// index,holistic,tens,ones,count,orientation_deg
void write_manifest_csv(const Dataset& d, const std::filesystem::path& path);

}  // namespace jnr

#endif  // JNR_SYNTHGEN_HPP_

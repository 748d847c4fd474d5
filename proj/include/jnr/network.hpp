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

// Multi-head classifier: a stack of valid (unpadded) 3x3 stride-2
// convolutions with ReLU, global average pooling, a shared fully connected
// feature layer with ReLU, and four linear heads (holistic number, tens
// digit, ones digit, digit count) each followed by a softmax.
//
// Activations are HWC. Parameter tensors, in declaration order:
//
//   convK.weight  [out, k, k, in]     convK.bias  [out]     K = 1..B
//   feature.weight [D, C_last]        feature.bias [D]
//   head_holistic / head_tens / head_ones / head_count
//     .weight [classes, D]            .bias [classes]
//
// JNRM checkpoint layout (little-endian):
//
//   "JNRM", u16 version (1),
//   u16 height, u16 width, u16 channels, u16 block count B,
//   B x (u16 out_channels, u16 kernel, u16 stride),
//   u32 feature_dim, 4 x u16 head sizes (101, 11, 11, 3),
//   then every tensor above as f64 values in declaration order.

#ifndef JNR_NETWORK_HPP_
#define JNR_NETWORK_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "jnr/decision.hpp"
#include "jnr/synthgen.hpp"

namespace jnr {

inline constexpr std::array<int, 4> kHeadSizes{101, 11, 11, 3};
inline constexpr std::array<const char*, 4> kHeadNames{
    "head_holistic", "head_tens", "head_ones", "head_count"};
inline constexpr std::uint16_t kCheckpointVersion = 1;

struct ConvSpec {
  int out_channels = 16;
  int kernel = 3;
  int stride = 2;
  friend bool operator==(const ConvSpec&, const ConvSpec&) = default;
};

struct NetConfig {
  ImageDims input;
  std::vector<ConvSpec> conv_blocks{{16, 3, 2}, {32, 3, 2}, {64, 3, 2}};
  int feature_dim = 128;

  // Throws DomainError.
  void validate() const;
  friend bool operator==(const NetConfig&, const NetConfig&) = default;
};

enum class BackbonePreset { kSmall, kMedium, kLarge };

NetConfig preset_config(BackbonePreset preset, ImageDims input = {});
// "S", "M" or "L"; throws DomainError otherwise.
BackbonePreset parse_preset(std::string_view name);
const char* preset_name(BackbonePreset preset);

enum class LayerKind { kConv, kLinear };

struct LayerSpec {
  std::string name;
  LayerKind kind = LayerKind::kLinear;
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 1;
  int stride = 1;
  int in_h = 1, in_w = 1;
  int out_h = 1, out_w = 1;

  std::size_t fan_in() const {
    return static_cast<std::size_t>(kernel) * kernel * in_channels;
  }
  std::size_t weight_count() const { return fan_in() * out_channels; }
  std::size_t param_count() const { return weight_count() + out_channels; }
  // Multiply-accumulate counted as two FLOPs; bias, ReLU, pooling and
  // softmax are not counted.
  std::uint64_t flops_per_sample() const {
    return 2ULL * weight_count() * static_cast<std::uint64_t>(out_h) * out_w;
  }
};

// Convolutions first, then "feature", then the four heads.
std::vector<LayerSpec> layer_specs(const NetConfig& config);

std::uint64_t count_params(const NetConfig& config);
std::uint64_t count_flops(const NetConfig& config, std::uint64_t batch_size);

struct Tensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  friend bool operator==(const Tensor&, const Tensor&) = default;
};

struct ModelParams {
  NetConfig config;
  std::vector<Tensor> tensors;

  Tensor& weight(std::size_t layer) { return tensors[2 * layer]; }
  const Tensor& weight(std::size_t layer) const { return tensors[2 * layer]; }
  Tensor& bias(std::size_t layer) { return tensors[2 * layer + 1]; }
  const Tensor& bias(std::size_t layer) const { return tensors[2 * layer + 1]; }

  std::size_t param_count() const;
  bool all_finite() const;

  // Same tensor layout, every value zero.
  static ModelParams zeros(const NetConfig& config);

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

// Weights ~ N(0, 1/fan_in), biases zero.
ModelParams init_params(const NetConfig& config, std::uint64_t seed);

struct HeadOutputs {
  std::array<std::vector<double>, 4> probs;
  std::array<int, 4> argmax{};
  std::array<double, 4> max_prob{};

  HeadSummary summary() const { return {argmax, max_prob}; }
};

// Softmax with the row maximum subtracted first.
void stable_softmax(std::span<const double> logits, std::span<double> out);

// Probabilities, lowest-index argmax and max-probability of raw logits.
HeadOutputs head_outputs(const std::array<std::span<const double>, 4>& logits);

struct ForwardResult {
  std::vector<HeadOutputs> outputs;
  // logits[i][m] is head m of sample i.
  std::vector<std::array<std::vector<double>, 4>> logits;
};

// batch holds n images, HWC, already scaled to [0, 1]. Throws DomainError
// on a size mismatch and NumericError on a non-finite logit.
ForwardResult forward(const ModelParams& params, std::span<const double> batch,
                      std::size_t n);

// Runs every sample of a dataset (pixels / 255) through the network,
// using up to worker_count() threads.
std::vector<HeadOutputs> forward_dataset(const ModelParams& params,
                                         const Dataset& dataset);

std::vector<std::uint8_t> encode_checkpoint(const ModelParams& params);
ModelParams decode_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace jnr

#endif  // JNR_NETWORK_HPP_

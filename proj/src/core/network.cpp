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

#include "jnr/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "byte_io.hpp"
#include "engine.hpp"
#include "jnr/error.hpp"
#include "jnr/parallel.hpp"
#include "jnr/rng.hpp"

namespace jnr {

void NetConfig::validate() const {
  if (input.height < 1 || input.width < 1 || input.channels < 1 ||
      input.height > 65535 || input.width > 65535 || input.channels > 65535) {
    throw DomainError("network input dims must be positive and fit in u16");
  }
  if (conv_blocks.empty()) throw DomainError("network needs at least one conv block");
  if (conv_blocks.size() > 65535) throw DomainError("too many conv blocks");
  if (feature_dim < 8) throw DomainError("feature_dim must be at least 8");
  int h = input.height, w = input.width;
  for (std::size_t i = 0; i < conv_blocks.size(); ++i) {
    const ConvSpec& c = conv_blocks[i];
    if (c.out_channels < 1 || c.kernel < 1 || c.stride < 1 ||
        c.out_channels > 65535 || c.kernel > 65535 || c.stride > 65535) {
      throw DomainError("conv block " + std::to_string(i + 1) +
                        ": channels, kernel and stride must be positive");
    }
    if (h < c.kernel || w < c.kernel) {
      throw DomainError("conv block " + std::to_string(i + 1) + ": input " +
                        std::to_string(h) + "x" + std::to_string(w) +
                        " smaller than kernel");
    }
    h = (h - c.kernel) / c.stride + 1;
    w = (w - c.kernel) / c.stride + 1;
  }
}

NetConfig preset_config(BackbonePreset preset, ImageDims input) {
  NetConfig c;
  c.input = input;
  switch (preset) {
    case BackbonePreset::kSmall:
      c.conv_blocks = {{16, 3, 2}, {32, 3, 2}, {64, 3, 2}};
      break;
    case BackbonePreset::kMedium:
      c.conv_blocks = {{32, 3, 2}, {64, 3, 2}, {128, 3, 2}};
      break;
    case BackbonePreset::kLarge:
      c.conv_blocks = {{64, 3, 2}, {128, 3, 2}, {256, 3, 2}};
      break;
  }
  return c;
}

BackbonePreset parse_preset(std::string_view name) {
  if (name == "S") return BackbonePreset::kSmall;
  if (name == "M") return BackbonePreset::kMedium;
  if (name == "L") return BackbonePreset::kLarge;
  throw DomainError("unknown backbone preset '" + std::string(name) +
                    "' (expected S, M or L)");
}

const char* preset_name(BackbonePreset preset) {
  switch (preset) {
    case BackbonePreset::kSmall: return "S";
    case BackbonePreset::kMedium: return "M";
    case BackbonePreset::kLarge: return "L";
  }
  return "?";
}

std::vector<LayerSpec> layer_specs(const NetConfig& config) {
  config.validate();
  std::vector<LayerSpec> specs;
  int h = config.input.height, w = config.input.width, c = config.input.channels;
  for (std::size_t i = 0; i < config.conv_blocks.size(); ++i) {
    const ConvSpec& b = config.conv_blocks[i];
    LayerSpec s;
    s.name = "conv" + std::to_string(i + 1);
    s.kind = LayerKind::kConv;
    s.in_channels = c;
    s.out_channels = b.out_channels;
    s.kernel = b.kernel;
    s.stride = b.stride;
    s.in_h = h;
    s.in_w = w;
    s.out_h = (h - b.kernel) / b.stride + 1;
    s.out_w = (w - b.kernel) / b.stride + 1;
    specs.push_back(s);
    h = s.out_h;
    w = s.out_w;
    c = b.out_channels;
  }
  auto linear = [](std::string name, int in, int out) {
    LayerSpec s;
    s.name = std::move(name);
    s.in_channels = in;
    s.out_channels = out;
    return s;
  };
  specs.push_back(linear("feature", c, config.feature_dim));
  for (std::size_t m = 0; m < 4; ++m)
    specs.push_back(linear(kHeadNames[m], config.feature_dim, kHeadSizes[m]));
  return specs;
}

std::uint64_t count_params(const NetConfig& config) {
  std::uint64_t total = 0;
  for (const LayerSpec& s : layer_specs(config)) total += s.param_count();
  return total;
}

std::uint64_t count_flops(const NetConfig& config, std::uint64_t batch_size) {
  std::uint64_t per_sample = 0;
  for (const LayerSpec& s : layer_specs(config)) per_sample += s.flops_per_sample();
  return per_sample * batch_size;
}

std::size_t ModelParams::param_count() const {
  std::size_t n = 0;
  for (const Tensor& t : tensors) n += t.size();
  return n;
}

bool ModelParams::all_finite() const {
  for (const Tensor& t : tensors)
    for (double v : t.values)
      if (!std::isfinite(v)) return false;
  return true;
}

ModelParams ModelParams::zeros(const NetConfig& config) {
  ModelParams p;
  p.config = config;
  for (const LayerSpec& s : layer_specs(config)) {
    Tensor w;
    w.name = s.name + ".weight";
    if (s.kind == LayerKind::kConv) {
      w.shape = {static_cast<std::size_t>(s.out_channels), static_cast<std::size_t>(s.kernel),
                 static_cast<std::size_t>(s.kernel), static_cast<std::size_t>(s.in_channels)};
    } else {
      w.shape = {static_cast<std::size_t>(s.out_channels),
                 static_cast<std::size_t>(s.in_channels)};
    }
    w.values.assign(s.weight_count(), 0.0);
    Tensor b;
    b.name = s.name + ".bias";
    b.shape = {static_cast<std::size_t>(s.out_channels)};
    b.values.assign(s.out_channels, 0.0);
    p.tensors.push_back(std::move(w));
    p.tensors.push_back(std::move(b));
  }
  return p;
}

ModelParams init_params(const NetConfig& config, std::uint64_t seed) {
  ModelParams p = ModelParams::zeros(config);
  const auto specs = layer_specs(config);
  for (std::size_t l = 0; l < specs.size(); ++l) {
    Rng rng(mix_seed(seed, l));
    const double scale = 1.0 / std::sqrt(static_cast<double>(specs[l].fan_in()));
    for (double& v : p.weight(l).values) v = scale * rng.normal();
  }
  return p;
}

void stable_softmax(std::span<const double> logits, std::span<double> out) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] /= sum;
}

HeadOutputs head_outputs(const std::array<std::span<const double>, 4>& logits) {
  HeadOutputs h;
  for (std::size_t m = 0; m < 4; ++m) {
    const auto& z = logits[m];
    for (double v : z)
      if (!std::isfinite(v))
        throw NumericError(std::string("non-finite logit in ") + kHeadNames[m]);
    h.probs[m].resize(z.size());
    stable_softmax(z, h.probs[m]);
    // std::max_element returns the first maximum: lowest index wins ties.
    const auto it = std::max_element(h.probs[m].begin(), h.probs[m].end());
    h.argmax[m] = static_cast<int>(it - h.probs[m].begin());
    h.max_prob[m] = *it;
  }
  return h;
}

namespace {

void collect(const detail::Activations& a, std::size_t b, HeadOutputs* out,
             std::array<std::vector<double>, 4>* logits) {
  std::array<std::span<const double>, 4> z;
  for (std::size_t m = 0; m < 4; ++m)
    z[m] = std::span<const double>(a.logits[m]).subspan(b * kHeadSizes[m], kHeadSizes[m]);
  *out = head_outputs(z);
  if (logits) {
    for (std::size_t m = 0; m < 4; ++m) (*logits)[m].assign(z[m].begin(), z[m].end());
  }
}

}  // namespace

ForwardResult forward(const ModelParams& params, std::span<const double> batch,
                      std::size_t n) {
  const std::size_t pc = params.config.input.pixel_count();
  if (batch.size() != n * pc) {
    throw DomainError("forward: batch has " + std::to_string(batch.size()) +
                      " values, expected " + std::to_string(n) + " x " + std::to_string(pc));
  }
  const auto specs = layer_specs(params.config);
  ForwardResult r;
  r.outputs.resize(n);
  r.logits.resize(n);
  detail::Activations a;
  for (std::size_t first = 0; first < n; first += detail::kChunkSize) {
    const std::size_t m = std::min(detail::kChunkSize, n - first);
    detail::forward_chunk(params, specs, batch.subspan(first * pc, m * pc), m, a);
    for (std::size_t b = 0; b < m; ++b)
      collect(a, b, &r.outputs[first + b], &r.logits[first + b]);
  }
  return r;
}

std::vector<HeadOutputs> forward_dataset(const ModelParams& params, const Dataset& dataset) {
  if (dataset.dims() != params.config.input) {
    throw DomainError("dataset dims do not match network input");
  }
  const auto specs = layer_specs(params.config);
  std::vector<HeadOutputs> out(dataset.size());
  const std::size_t chunks = (dataset.size() + detail::kChunkSize - 1) / detail::kChunkSize;
  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t first = c * detail::kChunkSize;
    const std::size_t m = std::min(detail::kChunkSize, dataset.size() - first);
    std::vector<double> x;
    detail::scale_pixels(dataset, first, m, x);
    detail::Activations a;
    detail::forward_chunk(params, specs, x, m, a);
    for (std::size_t b = 0; b < m; ++b) collect(a, b, &out[first + b], nullptr);
  });
  return out;
}

std::vector<std::uint8_t> encode_checkpoint(const ModelParams& params) {
  const NetConfig& c = params.config;
  c.validate();
  std::vector<std::uint8_t> out;
  detail::ByteWriter w(out);
  w.bytes(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>("JNRM"), 4));
  w.u16(kCheckpointVersion);
  w.u16(static_cast<std::uint16_t>(c.input.height));
  w.u16(static_cast<std::uint16_t>(c.input.width));
  w.u16(static_cast<std::uint16_t>(c.input.channels));
  w.u16(static_cast<std::uint16_t>(c.conv_blocks.size()));
  for (const ConvSpec& b : c.conv_blocks) {
    w.u16(static_cast<std::uint16_t>(b.out_channels));
    w.u16(static_cast<std::uint16_t>(b.kernel));
    w.u16(static_cast<std::uint16_t>(b.stride));
  }
  w.u32(static_cast<std::uint32_t>(c.feature_dim));
  for (int s : kHeadSizes) w.u16(static_cast<std::uint16_t>(s));
  const ModelParams layout = ModelParams::zeros(c);
  if (layout.tensors.size() != params.tensors.size())
    throw DomainError("checkpoint: tensor count does not match config");
  for (std::size_t i = 0; i < params.tensors.size(); ++i) {
    if (params.tensors[i].size() != layout.tensors[i].size())
      throw DomainError("checkpoint: tensor " + params.tensors[i].name + " has wrong size");
    for (double v : params.tensors[i].values) w.f64(v);
  }
  return out;
}

ModelParams decode_checkpoint(std::span<const std::uint8_t> bytes) {
  using R = FormatError::Reason;
  detail::ByteReader r(bytes, "checkpoint");
  auto magic = r.bytes(4);
  if (std::memcmp(magic.data(), "JNRM", 4) != 0)
    throw FormatError(R::kBadMagic, "checkpoint: bad magic (expected JNRM)");
  const std::uint16_t version = r.u16();
  if (version != kCheckpointVersion)
    throw FormatError(R::kVersionMismatch,
                      "checkpoint: unsupported version " + std::to_string(version));
  NetConfig c;
  c.input.height = r.u16();
  c.input.width = r.u16();
  c.input.channels = r.u16();
  const std::uint16_t blocks = r.u16();
  c.conv_blocks.clear();
  for (std::uint16_t i = 0; i < blocks; ++i) {
    ConvSpec b;
    b.out_channels = r.u16();
    b.kernel = r.u16();
    b.stride = r.u16();
    c.conv_blocks.push_back(b);
  }
  c.feature_dim = static_cast<int>(r.u32());
  for (int s : kHeadSizes) {
    if (r.u16() != s) throw FormatError(R::kConfigMismatch, "checkpoint: unexpected head size");
  }
  try {
    c.validate();
  } catch (const DomainError& e) {
    throw FormatError(R::kConfigMismatch, std::string("checkpoint: ") + e.what());
  }
  ModelParams p = ModelParams::zeros(c);
  r.need(p.param_count() * 8);
  for (Tensor& t : p.tensors)
    for (double& v : t.values) v = r.f64();
  if (r.remaining() != 0)
    throw FormatError(R::kTrailingData, "checkpoint: trailing bytes");
  return p;
}

void save_checkpoint(const ModelParams& params, const std::filesystem::path& path) {
  detail::write_file(path, encode_checkpoint(params));
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  try {
    return decode_checkpoint(detail::read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(e.reason(), path.string() + ": " + e.what());
  }
}

}  // namespace jnr

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

// Chunked forward/backward kernels. A chunk is a small group of samples
// whose convolutions run as one stacked im2col GEMM.

#ifndef JNR_SRC_CORE_ENGINE_HPP_
#define JNR_SRC_CORE_ENGINE_HPP_

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "jnr/network.hpp"

namespace jnr::detail {

// Samples per chunk. Gradient reduction is ordered by chunk, so results
// are independent of the worker count.
inline constexpr std::size_t kChunkSize = 16;

struct Activations {
  std::size_t n = 0;
  std::vector<std::vector<double>> cols;  // per conv: (n*P_out) x fan_in
  std::vector<std::vector<double>> acts;  // per conv: (n*P_out) x C_out, post-ReLU
  std::vector<double> pooled;             // n x C_last
  std::vector<double> feature;            // n x D, post-ReLU
  std::array<std::vector<double>, 4> logits;  // n x head size
};

// Scales n HWC byte images to [0, 1] doubles.
void scale_pixels(const Dataset& d, std::size_t first, std::size_t n,
                  std::vector<double>& out);

void forward_chunk(const ModelParams& params, const std::vector<LayerSpec>& specs,
                   std::span<const double> input, std::size_t n, Activations& a);

// dlogits[m] is n x head size (gradient of the loss w.r.t. the logits).
// Parameter gradients are accumulated (+=) into grads.
void backward_chunk(const ModelParams& params, const std::vector<LayerSpec>& specs,
                    const Activations& a,
                    const std::array<std::vector<double>, 4>& dlogits,
                    ModelParams& grads);

}  // namespace jnr::detail

#endif  // JNR_SRC_CORE_ENGINE_HPP_

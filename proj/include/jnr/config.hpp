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

// Run configuration: a single JSON document with the sections
//
//   {
//     "seed": 42,
//     "gen": { "n_total": 1000, "split_fractions": [0.77, 0.145, 0.085],
//              "class_skew": 0.5, "blur_sigma_max": 1.0, "noise_std": 6.0,
//              "occlusion_prob": 0.1, "visibility_threshold": 0.1,
//              "balance_visibility": false,
//              "height": 64, "width": 64, "channels": 3 },
//     "net": { "preset": "S" }   or
//            { "conv_blocks": [{"out_channels": 16, "kernel": 3, "stride": 2}, ...],
//              "feature_dim": 128 },
//     "train": { "epochs": 100, "batch_size": 64, "learning_rate": 0.001,
//                "beta1": 0.9, "beta2": 0.999, "epsilon": 1e-8, "shuffle": true },
//     "loss_weights": [0.2, 0.3, 0.3, 0.2],
//     "paths": { "dataset_dir": "data", "checkpoint": "model.jnrm",
//                "report_dir": "reports" }
//   }
//
// Every key is optional and falls back to its default; unknown keys are an
// error. The network input dims always follow the generator dims.

#ifndef JNR_CONFIG_HPP_
#define JNR_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "jnr/network.hpp"
#include "jnr/synthgen.hpp"
#include "jnr/training.hpp"

namespace jnr {

struct RunPaths {
  std::filesystem::path dataset_dir = "data";
  std::filesystem::path checkpoint = "model.jnrm";
  std::filesystem::path report_dir = "reports";
};

struct RunConfig {
  std::uint64_t seed = 42;
  GenConfig gen;
  NetConfig net;
  TrainConfig train;
  LossWeights loss_weights;
  RunPaths paths;

  // Throws ConfigError naming the offending section.
  void validate() const;
  std::uint64_t gen_seed() const;
  std::uint64_t baseline_seed() const;
};

// Throw ConfigError on malformed JSON, unknown keys, wrong types or
// invalid values.
RunConfig parse_run_config(std::string_view json_text);
RunConfig load_run_config(const std::filesystem::path& path);

std::string to_json_text(const RunConfig& config);

// <dataset_dir>/<split>.jnrd and <split>.csv
std::filesystem::path dataset_path(const RunConfig& config, std::string_view split);
std::filesystem::path manifest_path(const RunConfig& config, std::string_view split);

}  // namespace jnr

#endif  // JNR_CONFIG_HPP_

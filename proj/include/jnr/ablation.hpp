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

// Ablation grids: the five loss-weight rows, and backbone presets S/M/L
// crossed with batch sizes 32/64/100/150. Every cell trains from the same
// seed on the same data.

#ifndef JNR_ABLATION_HPP_
#define JNR_ABLATION_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "jnr/config.hpp"

namespace jnr {

enum class AblationGrid { kWeights, kBackbone };

// "weights" / "backbone"; throws DomainError otherwise.
AblationGrid parse_grid(std::string_view name);

inline constexpr std::array<int, 4> kAblationBatchSizes{32, 64, 100, 150};

struct AblationCell {
  std::string name;
  NetConfig net;
  TrainConfig train;
  LossWeights weights;
};

std::vector<AblationCell> ablation_cells(AblationGrid grid, const RunConfig& base);

struct AblationRow {
  AblationCell cell;
  std::uint64_t params = 0;
  std::uint64_t flops = 0;  // per training batch
  double val_top2 = 0.0;
  int best_epoch = 0;
  bool ok = false;
  std::string error;
};

using AblationRowCallback = std::function<void(const AblationRow&)>;

// A cell that throws is recorded with ok = false and the run continues.
std::vector<AblationRow> run_ablation(AblationGrid grid, const RunConfig& base,
                                      const Dataset& train_set, const Dataset& val_set,
                                      const AblationRowCallback& on_row = {});

// cell,batch_size,alpha1,alpha2,alpha3,alpha4,params,flops,val_top2,best_epoch,status
void write_ablation_csv(const std::vector<AblationRow>& rows,
                        const std::filesystem::path& path);

}  // namespace jnr

#endif  // JNR_ABLATION_HPP_

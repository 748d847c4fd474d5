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

#include "jnr/ablation.hpp"

#include <cstdio>
#include <fstream>

#include "jnr/error.hpp"

namespace jnr {

AblationGrid parse_grid(std::string_view name) {
  if (name == "weights") return AblationGrid::kWeights;
  if (name == "backbone") return AblationGrid::kBackbone;
  throw DomainError("unknown ablation grid '" + std::string(name) + "'");
}

std::vector<AblationCell> ablation_cells(AblationGrid grid, const RunConfig& base) {
  std::vector<AblationCell> cells;
  if (grid == AblationGrid::kWeights) {
    char name[96];
    for (const LossWeights& w : loss_weight_grid()) {
      std::snprintf(name, sizeof name, "alpha=%g/%g/%g/%g", w.alpha[0], w.alpha[1],
                    w.alpha[2], w.alpha[3]);
      cells.push_back({name, base.net, base.train, w});
    }
    return cells;
  }
  for (BackbonePreset p :
       {BackbonePreset::kSmall, BackbonePreset::kMedium, BackbonePreset::kLarge}) {
    for (int batch : kAblationBatchSizes) {
      AblationCell c{std::string(preset_name(p)) + "/b" + std::to_string(batch),
                     preset_config(p, base.gen.dims), base.train, base.loss_weights};
      c.net.feature_dim = base.net.feature_dim;
      c.train.batch_size = batch;
      cells.push_back(std::move(c));
    }
  }
  return cells;
}

std::vector<AblationRow> run_ablation(AblationGrid grid, const RunConfig& base,
                                      const Dataset& train_set, const Dataset& val_set,
                                      const AblationRowCallback& on_row) {
  std::vector<AblationRow> rows;
  for (AblationCell& cell : ablation_cells(grid, base)) {
    AblationRow row;
    row.cell = std::move(cell);
    try {
      row.params = count_params(row.cell.net);
      row.flops = count_flops(row.cell.net, row.cell.train.batch_size);
      const TrainResult r =
          train(row.cell.net, row.cell.train, row.cell.weights, train_set, val_set);
      row.best_epoch = r.history.best_epoch;
      row.val_top2 = r.history.epochs[static_cast<std::size_t>(r.history.best_epoch - 1)].val_top2;
      row.ok = true;
    } catch (const Error& e) {
      row.error = e.what();
    }
    if (on_row) on_row(row);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_ablation_csv(const std::vector<AblationRow>& rows,
                        const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << "cell,batch_size,alpha1,alpha2,alpha3,alpha4,params,flops,val_top2,best_epoch,status\n";
  char buf[256];
  for (const AblationRow& r : rows) {
    const auto& a = r.cell.weights.alpha;
    std::snprintf(buf, sizeof buf, "%s,%d,%g,%g,%g,%g,%llu,%llu,%.6f,%d,", r.cell.name.c_str(),
                  r.cell.train.batch_size, a[0], a[1], a[2], a[3],
                  static_cast<unsigned long long>(r.params),
                  static_cast<unsigned long long>(r.flops), r.val_top2, r.best_epoch);
    out << buf;
    if (r.ok) {
      out << "ok\n";
    } else {
      std::string msg = r.error;
      for (char& ch : msg)
        if (ch == ',' || ch == '\n') ch = ' ';
      out << "failed: " << msg << "\n";
    }
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace jnr

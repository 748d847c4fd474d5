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

// jnr: generate data, train, evaluate, ablate and gradient-check from a
// JSON run config.
//
// Exit codes: 0 ok, 1 config or usage error, 2 I/O or format error,
// 3 numeric divergence, 4 verification failure, 5 internal error.

#include <cstdio>
#include <filesystem>
#include <string>
#include <system_error>

#include "CLI11.hpp"
#include "jnr/jnr.h"

namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kConfig = 1, kIo = 2, kNumeric = 3, kVerify = 4, kInternal = 5 };

int exit_code(jnr_status s) {
  switch (s) {
    case JNR_OK: return kOk;
    case JNR_ERR_CONFIG:
    case JNR_ERR_DOMAIN: return kConfig;
    case JNR_ERR_IO: return kIo;
    case JNR_ERR_NUMERIC: return kNumeric;
    case JNR_ERR_VERIFY: return kVerify;
    case JNR_ERR_INTERNAL: return kInternal;
  }
  return kInternal;
}

int report_failure(jnr_status s) {
  std::fprintf(stderr, "jnr: %s: %s\n", jnr_status_name(s), jnr_last_error());
  return exit_code(s);
}

// Small RAII holders for the C handles.
template <typename T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(p); }
  T** out() { return &p; }
  operator T*() const { return p; }
};
using Config = Handle<jnr_config, jnr_config_free>;
using Dataset = Handle<jnr_dataset, jnr_dataset_free>;
using Model = Handle<jnr_model, jnr_model_free>;
using Report = Handle<jnr_report, jnr_report_free>;

struct FsError {
  std::string what;
};

void make_dirs(const fs::path& dir) {
  if (dir.empty()) return;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw FsError{"cannot create directory " + dir.string() + ": " + ec.message()};
}

double pct(double v) { return 100.0 * v; }

int cmd_gen(const std::string& config_path) {
  Config cfg;
  if (jnr_status s = jnr_config_load(config_path.c_str(), cfg.out())) return report_failure(s);
  make_dirs(jnr_config_path(cfg, "dataset_dir"));
  Dataset splits[3];
  if (jnr_status s = jnr_generate(cfg, splits[0].out(), splits[1].out(), splits[2].out()))
    return report_failure(s);
  const char* names[3] = {"train", "val", "test"};
  for (int i = 0; i < 3; ++i) {
    const std::string data = jnr_config_split_path(cfg, names[i], 0);
    const std::string manifest = jnr_config_split_path(cfg, names[i], 1);
    if (jnr_status s = jnr_dataset_save(splits[i], data.c_str())) return report_failure(s);
    if (jnr_status s = jnr_dataset_write_manifest(splits[i], manifest.c_str()))
      return report_failure(s);
    std::printf("%-5s %6zu  %s\n", names[i], jnr_dataset_size(splits[i]), data.c_str());
  }
  return kOk;
}

jnr_status load_split(jnr_config* cfg, const char* split, Dataset& out) {
  const std::string path = jnr_config_split_path(cfg, split, 0);
  return jnr_dataset_load(path.c_str(), out.out());
}

void print_epoch(const jnr_epoch* e, void* user) {
  const int total = *static_cast<const int*>(user);
  std::printf("epoch %3d/%d  loss %.4f  val Top-1 %6.2f%%  Top-2 %6.2f%%  (%.1fs)\n", e->epoch,
              total, e->total_loss, pct(e->val_top1), pct(e->val_top2), e->seconds);
  std::fflush(stdout);
}

int cmd_train(const std::string& config_path) {
  Config cfg;
  if (jnr_status s = jnr_config_load(config_path.c_str(), cfg.out())) return report_failure(s);
  Dataset train, val;
  if (jnr_status s = load_split(cfg, "train", train)) return report_failure(s);
  if (jnr_status s = load_split(cfg, "val", val)) return report_failure(s);

  int epochs = jnr_config_epochs(cfg);
  Model model;
  double last_top1 = 0.0, last_top2 = 0.0;
  struct Ctx {
    int epochs;
    double* top1;
    double* top2;
  } ctx{epochs, &last_top1, &last_top2};
  auto on_epoch = [](const jnr_epoch* e, void* user) {
    auto* c = static_cast<Ctx*>(user);
    print_epoch(e, &c->epochs);
    *c->top1 = e->val_top1;
    *c->top2 = e->val_top2;
  };
  if (jnr_status s = jnr_train(cfg, train, val, on_epoch, &ctx, model.out()))
    return report_failure(s);

  const fs::path checkpoint = jnr_config_path(cfg, "checkpoint");
  const fs::path report_dir = jnr_config_path(cfg, "report_dir");
  make_dirs(checkpoint.parent_path());
  make_dirs(report_dir);
  if (jnr_status s = jnr_model_save(model, checkpoint.string().c_str())) return report_failure(s);
  const fs::path history = report_dir / "history.csv";
  if (jnr_status s = jnr_model_write_history(model, history.string().c_str()))
    return report_failure(s);
  std::printf("final validation: Top-1 %.2f%%  Top-2 %.2f%%\n", pct(last_top1), pct(last_top2));
  std::printf("saved best epoch %d to %s\n", jnr_model_best_epoch(model), checkpoint.c_str());
  return kOk;
}

struct EvalOptions {
  std::string config;
  std::string checkpoint;
  std::string mode = "top1";
  std::string split = "test";
  std::string baseline;
  std::string predictions;
  int trials = 10;
  bool no_adrs = false;
};

int cmd_eval(const EvalOptions& o) {
  Config cfg;
  if (jnr_status s = jnr_config_load(o.config.c_str(), cfg.out())) return report_failure(s);
  const jnr_mode mode = o.mode == "top2" ? JNR_TOP2 : JNR_TOP1;
  const int refine = o.no_adrs ? 0 : 1;

  Report report;
  std::string source;
  if (!o.predictions.empty()) {
    source = "predictions";
    if (jnr_status s = jnr_score_predictions(o.predictions.c_str(), mode, refine, report.out()))
      return report_failure(s);
  } else {
    Dataset data;
    if (jnr_status s = load_split(cfg, o.split.c_str(), data)) return report_failure(s);
    if (o.baseline == "random") {
      source = "random";
      const uint64_t seed = jnr_stream_seed(jnr_config_seed(cfg), "baseline");
      if (jnr_status s = jnr_random_baseline(data, o.trials, seed, mode, refine, report.out()))
        return report_failure(s);
    } else {
      source = "model";
      const std::string ckpt =
          o.checkpoint.empty() ? jnr_config_path(cfg, "checkpoint") : o.checkpoint;
      Model model;
      if (jnr_status s = jnr_model_load(ckpt.c_str(), model.out())) return report_failure(s);
      if (jnr_status s = jnr_model_check_config(model, cfg)) {
        std::fprintf(stderr, "jnr: %s: %s\n", ckpt.c_str(), jnr_last_error());
        return exit_code(s);
      }
      if (jnr_status s = jnr_evaluate(model, data, mode, refine, report.out()))
        return report_failure(s);
    }
    source += "_" + o.split;
  }

  const fs::path report_dir = jnr_config_path(cfg, "report_dir");
  make_dirs(report_dir);
  const std::string stem = "eval_" + source + "_" + o.mode + (o.no_adrs ? "_noadrs" : "");
  const fs::path json_path = report_dir / (stem + ".json");
  const fs::path table_path = report_dir / (stem + ".txt");
  std::string method = source.substr(0, source.find('_'));
  if (o.no_adrs) method += " (no ADRS)";
  const std::string table = jnr_report_table(report, method.c_str());
  std::fputs(table.c_str(), stdout);
  if (jnr_status s = jnr_report_write_json(report, json_path.string().c_str()))
    return report_failure(s);
  if (std::FILE* f = std::fopen(table_path.string().c_str(), "w")) {
    std::fputs(table.c_str(), f);
    std::fclose(f);
  } else {
    std::fprintf(stderr, "jnr: cannot write %s\n", table_path.c_str());
    return kIo;
  }
  std::printf("wrote %s\n", json_path.c_str());
  return kOk;
}

int cmd_ablate(const std::string& config_path, const std::string& grid) {
  Config cfg;
  if (jnr_status s = jnr_config_load(config_path.c_str(), cfg.out())) return report_failure(s);
  Dataset train, val;
  if (jnr_status s = load_split(cfg, "train", train)) return report_failure(s);
  if (jnr_status s = load_split(cfg, "val", val)) return report_failure(s);
  const fs::path report_dir = jnr_config_path(cfg, "report_dir");
  make_dirs(report_dir);
  const fs::path csv = report_dir / ("ablation_" + grid + ".csv");
  auto on_row = [](const jnr_ablation_row* r, void*) {
    if (r->ok) {
      std::printf("%-28s params %9llu  flops %14llu  val Top-2 %6.2f%%\n", r->cell,
                  static_cast<unsigned long long>(r->params),
                  static_cast<unsigned long long>(r->flops), pct(r->val_top2));
    } else {
      std::printf("%-28s FAILED: %s\n", r->cell, r->error);
    }
    std::fflush(stdout);
  };
  if (jnr_status s = jnr_ablate(cfg, grid.c_str(), train, val, csv.string().c_str(), on_row,
                                nullptr)) {
    return report_failure(s);
  }
  std::printf("wrote %s\n", csv.c_str());
  return kOk;
}

int cmd_gradcheck(const std::string& config_path, int probes, bool corrupt) {
  Config cfg;
  if (!config_path.empty()) {
    if (jnr_status s = jnr_config_load(config_path.c_str(), cfg.out())) return report_failure(s);
  }
  jnr_gradcheck_result r{};
  const jnr_status s = jnr_gradcheck(cfg, probes, corrupt ? 1 : 0, &r);
  if (s != JNR_OK && s != JNR_ERR_VERIFY) return report_failure(s);
  std::printf("probed layers: %s\n", r.probed_layers);
  std::printf("probes: %d\n", r.n_probes);
  std::printf("max relative error: %.3e\n", r.max_rel_error);
  std::printf("worst coordinate: %s[%zu] analytic %.9e numeric %.9e\n", r.worst_tensor,
              r.worst_index, r.worst_analytic, r.worst_numeric);
  if (s == JNR_ERR_VERIFY) {
    std::printf("FAIL\n");
    return kVerify;
  }
  std::printf("PASS\n");
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Jersey number recognition toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "jnr 1.0.0");

  std::string config;
  auto* gen = app.add_subcommand("gen", "Generate train/val/test datasets and manifests");
  gen->add_option("-c,--config", config, "Run config (JSON)")->required();

  auto* train = app.add_subcommand("train", "Train a model and write a checkpoint");
  train->add_option("-c,--config", config, "Run config (JSON)")->required();

  EvalOptions eo;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint, a baseline or predictions");
  eval->add_option("-c,--config", eo.config, "Run config (JSON)")->required();
  eval->add_option("--checkpoint", eo.checkpoint, "Checkpoint (default: from config)");
  eval->add_option("--mode", eo.mode, "Grading mode")
      ->check(CLI::IsMember({"top1", "top2"}))
      ->capture_default_str();
  eval->add_option("--split", eo.split, "Dataset split")
      ->check(CLI::IsMember({"train", "val", "test"}))
      ->capture_default_str();
  eval->add_flag("--no-adrs", eo.no_adrs, "Disable digit-count refinement");
  eval->add_option("--baseline", eo.baseline, "Score a baseline instead of the model")
      ->check(CLI::IsMember({"random"}));
  eval->add_option("--trials", eo.trials, "Random baseline trials")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  eval->add_option("--predictions", eo.predictions,
                   "Score a CSV of external predictions instead of the model");

  std::string grid;
  auto* ablate = app.add_subcommand("ablate", "Run an ablation grid");
  ablate->add_option("-c,--config", config, "Run config (JSON)")->required();
  ablate->add_option("--grid", grid, "Grid to run")
      ->required()
      ->check(CLI::IsMember({"weights", "backbone"}));

  int probes = 200;
  bool corrupt = false;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient check");
  gradcheck->add_option("-c,--config", config, "Run config (seed and loss weights)");
  gradcheck->add_option("--probes", probes, "Probed coordinates")->capture_default_str();
  gradcheck->add_flag("--corrupt-gradient", corrupt)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (*gen) return cmd_gen(config);
    if (*train) return cmd_train(config);
    if (*eval) return cmd_eval(eo);
    if (*ablate) return cmd_ablate(config, grid);
    if (*gradcheck) return cmd_gradcheck(config, probes, corrupt);
  } catch (const FsError& e) {
    std::fprintf(stderr, "jnr: %s\n", e.what.c_str());
    return kIo;
  }
  return kConfig;
}

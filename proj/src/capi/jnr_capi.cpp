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

#include "jnr/jnr.h"

#include <algorithm>
#include <cstring>
#include <exception>
#include <fstream>
#include <memory>
#include <new>
#include <optional>
#include <string>

#include "jnr/ablation.hpp"
#include "jnr/config.hpp"
#include "jnr/decision.hpp"
#include "jnr/error.hpp"
#include "jnr/labels.hpp"
#include "jnr/metrics.hpp"
#include "jnr/network.hpp"
#include "jnr/rng.hpp"
#include "jnr/synthgen.hpp"
#include "jnr/training.hpp"

struct jnr_config {
  jnr::RunConfig value;
  std::string scratch;
};

struct jnr_dataset {
  jnr::Dataset value;
};

struct jnr_model {
  jnr::ModelParams params;
  std::optional<jnr::TrainHistory> history;
};

struct jnr_report {
  jnr::MetricsReport value;
  std::string table;
};

namespace {

thread_local std::string g_last_error;

jnr_status fail(jnr_status status, std::string what) {
  g_last_error = std::move(what);
  return status;
}

template <typename F>
jnr_status guard(F&& fn) noexcept {
  try {
    fn();
    return JNR_OK;
  } catch (const jnr::ConfigError& e) {
    return fail(JNR_ERR_CONFIG, e.what());
  } catch (const jnr::IoError& e) {
    return fail(JNR_ERR_IO, e.what());
  } catch (const jnr::FormatError& e) {
    return fail(JNR_ERR_IO, e.what());
  } catch (const jnr::NumericError& e) {
    return fail(JNR_ERR_NUMERIC, e.what());
  } catch (const jnr::DomainError& e) {
    return fail(JNR_ERR_DOMAIN, e.what());
  } catch (const std::bad_alloc&) {
    return fail(JNR_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(JNR_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(JNR_ERR_INTERNAL, "unknown error");
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw jnr::DomainError(what);
}

jnr::GradingMode to_mode(jnr_mode mode) {
  require(mode == JNR_TOP1 || mode == JNR_TOP2, "invalid grading mode");
  return mode == JNR_TOP1 ? jnr::GradingMode::kTop1 : jnr::GradingMode::kTop2;
}

jnr::DecisionOptions options(int refine) {
  jnr::DecisionOptions o;
  o.refine_count = refine != 0;
  return o;
}

void copy_text(char* dst, std::size_t cap, const std::string& src) {
  const std::size_t n = std::min(cap - 1, src.size());
  std::memcpy(dst, src.data(), n);
  dst[n] = '\0';
}

}  // namespace

extern "C" {

const char* jnr_last_error(void) { return g_last_error.c_str(); }

const char* jnr_status_name(jnr_status status) {
  switch (status) {
    case JNR_OK: return "ok";
    case JNR_ERR_CONFIG: return "config error";
    case JNR_ERR_IO: return "i/o or format error";
    case JNR_ERR_NUMERIC: return "numeric error";
    case JNR_ERR_VERIFY: return "verification failure";
    case JNR_ERR_DOMAIN: return "invalid argument";
    case JNR_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

jnr_status jnr_labels_from_number(int number, int out[4]) {
  return guard([&] {
    require(out != nullptr, "null output");
    const jnr::LabelSet l = jnr::labels_from_number(number);
    out[0] = l.holistic;
    out[1] = l.tens;
    out[2] = l.ones;
    out[3] = l.count;
  });
}

int jnr_compose_number(int tens, int ones, int count) {
  return jnr::compose_number(tens, ones, count);
}

jnr_status jnr_orientation_bin(double degrees, int* bin) {
  return guard([&] {
    require(bin != nullptr, "null output");
    *bin = jnr::orientation_bin(degrees);
  });
}

jnr_status jnr_refine_digit_count(int tens, int count, double degrees, int* refined) {
  return guard([&] {
    require(refined != nullptr, "null output");
    *refined = jnr::refine_digit_count(tens, count, degrees);
  });
}

jnr_status jnr_decide(const int argmax[4], const double max_prob[3], double degrees,
                      int refine, int chance_normalized, jnr_decision* out) {
  return guard([&] {
    require(argmax && max_prob && out, "null argument");
    jnr::HeadSummary h;
    for (int i = 0; i < 4; ++i) h.argmax[i] = argmax[i];
    for (int i = 0; i < 3; ++i) h.max_prob[i] = max_prob[i];
    jnr::DecisionOptions o = options(refine);
    o.chance_normalized = chance_normalized != 0;
    const jnr::Decision d = jnr::decide(h, degrees, o);
    out->holistic = d.pair.holistic;
    out->composed = d.pair.composed;
    out->top1 = d.top1.value;
    out->chose_holistic = d.top1.chose_holistic ? 1 : 0;
    out->refined_count = d.refined_count;
  });
}

jnr_status jnr_config_load(const char* path, jnr_config** out) {
  return guard([&] {
    require(path && out, "null argument");
    *out = new jnr_config{jnr::load_run_config(path), {}};
  });
}

jnr_status jnr_config_parse(const char* json_text, jnr_config** out) {
  return guard([&] {
    require(json_text && out, "null argument");
    *out = new jnr_config{jnr::parse_run_config(json_text), {}};
  });
}

void jnr_config_free(jnr_config* config) { delete config; }

uint64_t jnr_config_seed(const jnr_config* config) { return config ? config->value.seed : 0; }

int jnr_config_epochs(const jnr_config* config) {
  return config ? config->value.train.epochs : 0;
}

const char* jnr_config_path(jnr_config* config, const char* which) {
  if (!config || !which) return nullptr;
  const jnr::RunPaths& p = config->value.paths;
  if (std::strcmp(which, "dataset_dir") == 0) config->scratch = p.dataset_dir.string();
  else if (std::strcmp(which, "checkpoint") == 0) config->scratch = p.checkpoint.string();
  else if (std::strcmp(which, "report_dir") == 0) config->scratch = p.report_dir.string();
  else return nullptr;
  return config->scratch.c_str();
}

const char* jnr_config_split_path(jnr_config* config, const char* split, int manifest) {
  if (!config || !split) return nullptr;
  config->scratch = (manifest ? jnr::manifest_path(config->value, split)
                              : jnr::dataset_path(config->value, split))
                        .string();
  return config->scratch.c_str();
}

jnr_status jnr_count_params(const jnr_config* config, uint64_t* out) {
  return guard([&] {
    require(config && out, "null argument");
    *out = jnr::count_params(config->value.net);
  });
}

jnr_status jnr_count_flops(const jnr_config* config, int batch_size, uint64_t* out) {
  return guard([&] {
    require(config && out, "null argument");
    *out = jnr::count_flops(config->value.net, batch_size);
  });
}

uint64_t jnr_stream_seed(uint64_t seed, const char* name) {
  return jnr::named_stream(seed, name ? name : "");
}

jnr_status jnr_generate(const jnr_config* config, jnr_dataset** train, jnr_dataset** val,
                        jnr_dataset** test) {
  return guard([&] {
    require(config && train && val && test, "null argument");
    jnr::SplitDatasets s = jnr::generate_dataset(config->value.gen, config->value.gen_seed());
    auto t = std::make_unique<jnr_dataset>(jnr_dataset{std::move(s.train)});
    auto v = std::make_unique<jnr_dataset>(jnr_dataset{std::move(s.val)});
    auto e = std::make_unique<jnr_dataset>(jnr_dataset{std::move(s.test)});
    *train = t.release();
    *val = v.release();
    *test = e.release();
  });
}

jnr_status jnr_dataset_load(const char* path, jnr_dataset** out) {
  return guard([&] {
    require(path && out, "null argument");
    *out = new jnr_dataset{jnr::parse_dataset(path)};
  });
}

jnr_status jnr_dataset_save(const jnr_dataset* dataset, const char* path) {
  return guard([&] {
    require(dataset && path, "null argument");
    jnr::serialize_dataset(dataset->value, path);
  });
}

jnr_status jnr_dataset_write_manifest(const jnr_dataset* dataset, const char* path) {
  return guard([&] {
    require(dataset && path, "null argument");
    jnr::write_manifest_csv(dataset->value, path);
  });
}

size_t jnr_dataset_size(const jnr_dataset* dataset) {
  return dataset ? dataset->value.size() : 0;
}

jnr_status jnr_dataset_sample(const jnr_dataset* dataset, size_t index, int labels[4],
                              float* orientation) {
  return guard([&] {
    require(dataset && labels && orientation, "null argument");
    require(index < dataset->value.size(), "sample index out of range");
    const jnr::LabelSet l = dataset->value.labels(index);
    labels[0] = l.holistic;
    labels[1] = l.tens;
    labels[2] = l.ones;
    labels[3] = l.count;
    *orientation = dataset->value.orientation(index);
  });
}

void jnr_dataset_free(jnr_dataset* dataset) { delete dataset; }

jnr_status jnr_train(const jnr_config* config, const jnr_dataset* train,
                     const jnr_dataset* val, jnr_epoch_fn on_epoch, void* user,
                     jnr_model** out) {
  return guard([&] {
    require(config && train && val && out, "null argument");
    jnr::EpochCallback cb;
    if (on_epoch) {
      cb = [&](const jnr::EpochRecord& r) {
        jnr_epoch e{};
        e.epoch = r.epoch;
        for (int i = 0; i < 4; ++i) e.loss[i] = r.train_loss.per_head[i];
        e.total_loss = r.train_loss.total;
        e.val_top1 = r.val_top1;
        e.val_top2 = r.val_top2;
        e.seconds = r.seconds;
        on_epoch(&e, user);
      };
    }
    const jnr::RunConfig& c = config->value;
    jnr::TrainResult r =
        jnr::train(c.net, c.train, c.loss_weights, train->value, val->value, cb);
    *out = new jnr_model{std::move(r.params), std::move(r.history)};
  });
}

jnr_status jnr_model_save(const jnr_model* model, const char* path) {
  return guard([&] {
    require(model && path, "null argument");
    jnr::save_checkpoint(model->params, path);
  });
}

jnr_status jnr_model_load(const char* path, jnr_model** out) {
  return guard([&] {
    require(path && out, "null argument");
    *out = new jnr_model{jnr::load_checkpoint(path), std::nullopt};
  });
}

jnr_status jnr_model_check_config(const jnr_model* model, const jnr_config* config) {
  return guard([&] {
    require(model && config, "null argument");
    if (!(model->params.config == config->value.net)) {
      throw jnr::FormatError(jnr::FormatError::Reason::kConfigMismatch,
                             "checkpoint architecture differs from the config network");
    }
  });
}

jnr_status jnr_model_write_history(const jnr_model* model, const char* path) {
  return guard([&] {
    require(model && path, "null argument");
    require(model->history.has_value(), "model has no training history");
    jnr::write_history_csv(*model->history, path);
  });
}

int jnr_model_best_epoch(const jnr_model* model) {
  return model && model->history ? model->history->best_epoch : 0;
}

void jnr_model_free(jnr_model* model) { delete model; }

jnr_status jnr_evaluate(const jnr_model* model, const jnr_dataset* dataset, jnr_mode mode,
                        int refine, jnr_report** out) {
  return guard([&] {
    require(model && dataset && out, "null argument");
    *out = new jnr_report{
        jnr::evaluate(model->params, dataset->value, to_mode(mode), options(refine)), {}};
  });
}

jnr_status jnr_random_baseline(const jnr_dataset* dataset, int trials, uint64_t seed,
                               jnr_mode mode, int refine, jnr_report** out) {
  return guard([&] {
    require(dataset && out, "null argument");
    *out = new jnr_report{
        jnr::random_baseline(dataset->value, trials, seed, to_mode(mode), options(refine)),
        {}};
  });
}

jnr_status jnr_score_predictions(const char* csv_path, jnr_mode mode, int refine,
                                 jnr_report** out) {
  return guard([&] {
    require(csv_path && out, "null argument");
    const auto rows = jnr::read_prediction_csv(std::filesystem::path(csv_path));
    *out = new jnr_report{jnr::score_rows(rows, to_mode(mode), options(refine)), {}};
  });
}

double jnr_report_accuracy(const jnr_report* r) { return r ? r->value.accuracy : 0.0; }
double jnr_report_precision(const jnr_report* r) { return r ? r->value.precision : 0.0; }
double jnr_report_recall(const jnr_report* r) { return r ? r->value.recall : 0.0; }
double jnr_report_f1(const jnr_report* r) { return r ? r->value.f1 : 0.0; }
uint64_t jnr_report_total(const jnr_report* r) { return r ? r->value.total : 0; }

jnr_status jnr_report_write_json(const jnr_report* report, const char* path) {
  return guard([&] {
    require(report && path, "null argument");
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw jnr::IoError(std::string("cannot open for writing: ") + path);
    out << jnr::to_json(report->value).dump(2) << "\n";
    if (!out) throw jnr::IoError(std::string("write failed: ") + path);
  });
}

const char* jnr_report_table(jnr_report* report, const char* method) {
  if (!report) return nullptr;
  report->table = jnr::format_table(report->value, method ? method : "");
  return report->table.c_str();
}

void jnr_report_free(jnr_report* report) { delete report; }

jnr_status jnr_ablate(const jnr_config* config, const char* grid, const jnr_dataset* train,
                      const jnr_dataset* val, const char* csv_path, jnr_ablation_fn on_row,
                      void* user) {
  return guard([&] {
    require(config && grid && train && val && csv_path, "null argument");
    jnr::AblationRowCallback cb;
    if (on_row) {
      cb = [&](const jnr::AblationRow& r) {
        jnr_ablation_row row{};
        row.cell = r.cell.name.c_str();
        row.batch_size = r.cell.train.batch_size;
        for (int i = 0; i < 4; ++i) row.alpha[i] = r.cell.weights.alpha[i];
        row.params = r.params;
        row.flops = r.flops;
        row.val_top2 = r.val_top2;
        row.ok = r.ok ? 1 : 0;
        row.error = r.error.c_str();
        on_row(&row, user);
      };
    }
    const auto rows = jnr::run_ablation(jnr::parse_grid(grid), config->value, train->value,
                                        val->value, cb);
    jnr::write_ablation_csv(rows, csv_path);
  });
}

jnr_status jnr_gradcheck(const jnr_config* config, int n_probes, int corrupt,
                         jnr_gradcheck_result* out) {
  jnr::GradCheckReport report;
  const jnr_status s = guard([&] {
    require(out != nullptr, "null output");
    jnr::GradCheckOptions o;
    o.n_probes = n_probes;
    o.corrupt_analytic = corrupt != 0;
    if (config) {
      o.seed = config->value.seed;
      o.weights = config->value.loss_weights;
    }
    report = jnr::grad_check(jnr::tiny_net_config(), o);
  });
  if (s != JNR_OK) return s;
  *out = jnr_gradcheck_result{};
  out->max_rel_error = report.max_rel_error;
  copy_text(out->worst_tensor, sizeof out->worst_tensor, report.worst.tensor);
  out->worst_index = report.worst.index;
  out->worst_analytic = report.worst.analytic;
  out->worst_numeric = report.worst.numeric;
  out->n_probes = report.n_probes;
  std::string layers;
  for (const std::string& l : report.probed_layers) layers += (layers.empty() ? "" : ",") + l;
  copy_text(out->probed_layers, sizeof out->probed_layers, layers);
  if (!(report.max_rel_error < 1e-4)) {
    return fail(JNR_ERR_VERIFY, "gradient check failed: max relative error " +
                                    std::to_string(report.max_rel_error) + " at " +
                                    report.worst.tensor + "[" +
                                    std::to_string(report.worst.index) + "]");
  }
  return JNR_OK;
}

}  // extern "C"

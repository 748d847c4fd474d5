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

#include "jnr/metrics.hpp"

#include <cstdio>

#include "jnr/error.hpp"
#include "jnr/rng.hpp"

namespace jnr {

const char* mode_name(GradingMode mode) {
  return mode == GradingMode::kTop1 ? "top1" : "top2";
}

GradingMode parse_mode(std::string_view name) {
  if (name == "top1") return GradingMode::kTop1;
  if (name == "top2") return GradingMode::kTop2;
  throw DomainError("unknown grading mode '" + std::string(name) + "'");
}

void ConfusionMatrix::add(int truth, int prediction) {
  if (truth < 0 || truth >= kClasses || prediction < 0 || prediction >= kClasses) {
    throw DomainError("confusion: label out of range");
  }
  ++cells_[static_cast<std::size_t>(truth) * kClasses + prediction];
  ++total_;
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  for (std::size_t i = 0; i < cells_.size(); ++i) cells_[i] += other.cells_[i];
  total_ += other.total_;
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t t = 0;
  for (int c = 0; c < kClasses; ++c) t += at(c, c);
  return t;
}

std::uint64_t ConfusionMatrix::row_sum(int truth) const {
  std::uint64_t s = 0;
  for (int p = 0; p < kClasses; ++p) s += at(truth, p);
  return s;
}

std::uint64_t ConfusionMatrix::col_sum(int prediction) const {
  std::uint64_t s = 0;
  for (int t = 0; t < kClasses; ++t) s += at(t, prediction);
  return s;
}

ConfusionMatrix confusion(std::span<const int> predictions, std::span<const int> truths) {
  if (predictions.size() != truths.size())
    throw DomainError("confusion: predictions and truths differ in length");
  if (truths.empty()) throw DomainError("confusion: empty input");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truths.size(); ++i) cm.add(truths[i], predictions[i]);
  return cm;
}

ConfusionMatrix confusion(std::span<const Decision> decisions,
                          std::span<const int> truths, GradingMode mode) {
  if (decisions.size() != truths.size())
    throw DomainError("confusion: decisions and truths differ in length");
  if (truths.empty()) throw DomainError("confusion: empty input");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    const Decision& d = decisions[i];
    int recorded = d.top1.value;
    if (mode == GradingMode::kTop2 && grade_top2(d.pair, truths[i])) recorded = truths[i];
    cm.add(truths[i], recorded);
  }
  return cm;
}

MetricsReport summarize(const ConfusionMatrix& cm, GradingMode mode) {
  if (cm.total() == 0) throw DomainError("summarize: empty confusion matrix");
  MetricsReport r;
  r.mode = mode;
  r.total = cm.total();
  const auto total = static_cast<double>(cm.total());
  r.accuracy = static_cast<double>(cm.trace()) / total;

  // Weighted terms are formed as (support * tp) / denominator from exact
  // integers, so the recall term reduces to tp without rounding and
  // weighted recall equals accuracy bit for bit.
  double precision_sum = 0.0, recall_sum = 0.0, f1_sum = 0.0;
  for (int c = 0; c < ConfusionMatrix::kClasses; ++c) {
    ClassMetrics m;
    m.label = c;
    m.support = cm.row_sum(c);
    m.predicted = cm.col_sum(c);
    if (m.support == 0 && m.predicted == 0) continue;
    const std::uint64_t tp = cm.at(c, c);
    m.precision = m.predicted ? static_cast<double>(tp) / static_cast<double>(m.predicted) : 0.0;
    m.recall = m.support ? static_cast<double>(tp) / static_cast<double>(m.support) : 0.0;
    m.f1 = m.precision + m.recall > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    if (m.support > 0) {
      if (m.predicted > 0) {
        precision_sum += static_cast<double>(m.support * tp) / static_cast<double>(m.predicted);
      }
      recall_sum += static_cast<double>(m.support * tp) / static_cast<double>(m.support);
      f1_sum += static_cast<double>(m.support) * m.f1;
    }
    r.per_class.push_back(m);
  }
  r.precision = precision_sum / total;
  r.recall = recall_sum / total;
  r.f1 = f1_sum / total;
  return r;
}

std::vector<Decision> decide_dataset(const ModelParams& params, const Dataset& dataset,
                                     const DecisionOptions& options) {
  const auto outputs = forward_dataset(params, dataset);
  std::vector<Decision> decisions(outputs.size());
  for (std::size_t i = 0; i < outputs.size(); ++i)
    decisions[i] = decide(outputs[i].summary(), dataset.orientation(i), options);
  return decisions;
}

namespace {

std::vector<int> truths_of(const Dataset& d) {
  std::vector<int> t(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) t[i] = d.labels(i).holistic;
  return t;
}

}  // namespace

EvalReports evaluate_all(const ModelParams& params, const Dataset& dataset,
                         const DecisionOptions& options) {
  if (dataset.empty()) throw DomainError("evaluate: empty dataset");
  const auto decisions = decide_dataset(params, dataset, options);
  const auto truths = truths_of(dataset);
  return {summarize(confusion(decisions, truths, GradingMode::kTop1), GradingMode::kTop1),
          summarize(confusion(decisions, truths, GradingMode::kTop2), GradingMode::kTop2)};
}

MetricsReport evaluate(const ModelParams& params, const Dataset& dataset,
                       GradingMode mode, const DecisionOptions& options) {
  if (dataset.empty()) throw DomainError("evaluate: empty dataset");
  const auto decisions = decide_dataset(params, dataset, options);
  return summarize(confusion(decisions, truths_of(dataset), mode), mode);
}

MetricsReport random_baseline(const Dataset& dataset, int trials, std::uint64_t seed,
                              GradingMode mode, const DecisionOptions& options) {
  if (trials < 1) throw DomainError("random_baseline: trials must be >= 1");
  if (dataset.empty()) throw DomainError("random_baseline: empty dataset");
  const auto truths = truths_of(dataset);
  MetricsReport avg;
  avg.mode = mode;
  ConfusionMatrix pooled;
  std::vector<Decision> decisions(dataset.size());
  for (int t = 0; t < trials; ++t) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(t)));
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      HeadSummary h;
      h.argmax[0] = static_cast<int>(rng.below(kHolisticClasses));
      h.argmax[1] = static_cast<int>(rng.below(kDigitClasses));
      h.argmax[2] = static_cast<int>(rng.below(kDigitClasses));
      h.argmax[3] = static_cast<int>(rng.below(kCountClasses));
      h.max_prob[0] = rng.uniform();
      h.max_prob[1] = rng.uniform();
      h.max_prob[2] = rng.uniform();
      decisions[i] = decide(h, dataset.orientation(i), options);
    }
    const ConfusionMatrix cm = confusion(decisions, truths, mode);
    const MetricsReport r = summarize(cm, mode);
    avg.accuracy += r.accuracy / trials;
    avg.precision += r.precision / trials;
    avg.recall += r.recall / trials;
    avg.f1 += r.f1 / trials;
    pooled.merge(cm);
  }
  avg.total = pooled.total();
  avg.per_class = summarize(pooled, mode).per_class;
  return avg;
}

MetricsReport score_rows(std::span<const ScoredRow> rows, GradingMode mode,
                         const DecisionOptions& options) {
  std::vector<Decision> decisions(rows.size());
  std::vector<int> truths(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    decisions[i] = decide(rows[i].heads, rows[i].orientation, options);
    truths[i] = rows[i].truth;
  }
  return summarize(confusion(decisions, truths, mode), mode);
}

nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json j;
  j["mode"] = mode_name(r.mode);
  j["total"] = r.total;
  j["accuracy"] = r.accuracy;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["f1"] = r.f1;
  auto& pc = j["per_class"] = nlohmann::json::array();
  for (const ClassMetrics& m : r.per_class) {
    pc.push_back({{"class", m.label},
                  {"support", m.support},
                  {"predicted", m.predicted},
                  {"precision", m.precision},
                  {"recall", m.recall},
                  {"f1", m.f1}});
  }
  return j;
}

std::string format_table(const MetricsReport& r, std::string_view method) {
  char buf[512];
  std::string out;
  std::snprintf(buf, sizeof buf, "%-6s %-24s %10s %10s %10s %10s\n", "Mode", "Method",
                "Accuracy", "Precision", "Recall", "F1 score");
  out += buf;
  std::snprintf(buf, sizeof buf, "%-6s %-24.24s %9.2f%% %9.2f%% %9.2f%% %9.2f%%\n",
                r.mode == GradingMode::kTop1 ? "Top-1" : "Top-2",
                std::string(method).c_str(), 100.0 * r.accuracy, 100.0 * r.precision,
                100.0 * r.recall, 100.0 * r.f1);
  out += buf;
  return out;
}

}  // namespace jnr

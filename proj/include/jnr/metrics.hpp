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

// Confusion-matrix evaluation over the 101 holistic classes.
//
// Aggregate precision, recall and F1 are support-weighted means over the
// classes that occur in the ground truth, which makes weighted recall
// identical to accuracy.

#ifndef JNR_METRICS_HPP_
#define JNR_METRICS_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "jnr/decision.hpp"
#include "jnr/labels.hpp"
#include "jnr/network.hpp"
#include "jnr/synthgen.hpp"

#include "json.hpp"

namespace jnr {

enum class GradingMode { kTop1, kTop2 };

const char* mode_name(GradingMode mode);
// "top1" / "top2"; throws DomainError otherwise.
GradingMode parse_mode(std::string_view name);

// Rows are ground truth, columns are predictions.
class ConfusionMatrix {
 public:
  static constexpr int kClasses = kHolisticClasses;

  ConfusionMatrix() : cells_(static_cast<std::size_t>(kClasses) * kClasses, 0) {}

  // Throws DomainError for labels outside [0, 100].
  void add(int truth, int prediction);
  void merge(const ConfusionMatrix& other);

  std::uint64_t at(int truth, int prediction) const {
    return cells_[static_cast<std::size_t>(truth) * kClasses + prediction];
  }
  std::uint64_t total() const { return total_; }
  std::uint64_t trace() const;
  std::uint64_t row_sum(int truth) const;
  std::uint64_t col_sum(int prediction) const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::vector<std::uint64_t> cells_;
  std::uint64_t total_ = 0;
};

struct ClassMetrics {
  int label = 0;
  std::uint64_t support = 0;
  std::uint64_t predicted = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct MetricsReport {
  GradingMode mode = GradingMode::kTop1;
  std::uint64_t total = 0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  // Classes present in the ground truth or the predictions, ascending.
  std::vector<ClassMetrics> per_class;
};

// Throws DomainError on length mismatch or empty input.
ConfusionMatrix confusion(std::span<const int> predictions, std::span<const int> truths);

// Top-1 records the selected value. Top-2 records the truth when either
// element of the pair matches and the Top-1 selection otherwise.
ConfusionMatrix confusion(std::span<const Decision> decisions,
                          std::span<const int> truths, GradingMode mode);

// Throws DomainError on an empty matrix.
MetricsReport summarize(const ConfusionMatrix& cm, GradingMode mode);

std::vector<Decision> decide_dataset(const ModelParams& params, const Dataset& dataset,
                                     const DecisionOptions& options = {});

struct EvalReports {
  MetricsReport top1;
  MetricsReport top2;
};

// Runs the network and the decision pipeline with each sample's ground-truth
// orientation. Throws DomainError on empty data or a dims mismatch.
EvalReports evaluate_all(const ModelParams& params, const Dataset& dataset,
                         const DecisionOptions& options = {});
MetricsReport evaluate(const ModelParams& params, const Dataset& dataset,
                       GradingMode mode, const DecisionOptions& options = {});

// Uniformly random head outputs through the same decision pipeline.
// Aggregate metrics are averaged over trials; per-class rows come from the
// confusion matrix pooled over all trials.
MetricsReport random_baseline(const Dataset& dataset, int trials, std::uint64_t seed,
                              GradingMode mode, const DecisionOptions& options = {});

// Scores externally produced predictions (see read_prediction_csv).
MetricsReport score_rows(std::span<const ScoredRow> rows, GradingMode mode,
                         const DecisionOptions& options = {});

nlohmann::json to_json(const MetricsReport& report);
// One-row table: Mode | Method | Accuracy | Precision | Recall | F1 score.
std::string format_table(const MetricsReport& report, std::string_view method);

}  // namespace jnr

#endif  // JNR_METRICS_HPP_

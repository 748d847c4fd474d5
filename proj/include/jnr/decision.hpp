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

// Post-processing of the four head outputs into jersey-number predictions.
//
// Two predictions are produced per image: the holistic head's argmax and a
// number composed from the digit heads, whose digit count is first refined
// by body orientation. Top-2 grading accepts either; Top-1 grading picks one
// by comparing head confidences.

#ifndef JNR_DECISION_HPP_
#define JNR_DECISION_HPP_

#include <array>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace jnr {

// Closed orientation window (degrees) in which a visible, non-zero tens
// digit forces a two-digit reading.
inline constexpr double kRefineWindowLow = 85.0;
inline constexpr double kRefineWindowHigh = 265.0;

// Argmax and max-softmax of the holistic, tens, ones and count heads.
struct HeadSummary {
  std::array<int, 4> argmax{};
  std::array<double, 4> max_prob{};
};

struct DecisionOptions {
  bool refine_count = true;
  // Compare P1..P3 relative to their chance level (1/101, 1/11) instead
  // of raw max-softmax values. Experimental.
  bool chance_normalized = false;
};

struct PredictionPair {
  int holistic = 100;
  int composed = 100;
  friend bool operator==(const PredictionPair&, const PredictionPair&) = default;
};

struct Top1Prediction {
  int value = 100;
  bool chose_holistic = false;
  friend bool operator==(const Top1Prediction&, const Top1Prediction&) = default;
};

struct Decision {
  PredictionPair pair;
  Top1Prediction top1;
  int refined_count = 0;
};

// Returns 2 when the orientation lies in [85, 265] and the tens prediction
// is a digit other than 0; otherwise returns count_pred unchanged.
int refine_digit_count(int tens_pred, int count_pred, double orientation) noexcept;

Top1Prediction select_top1(int holistic_pred, int tens_pred, int ones_pred,
                           int refined_count, double p_holistic, double p_tens,
                           double p_ones, bool chance_normalized = false) noexcept;

PredictionPair predict_pair(const HeadSummary& heads, double orientation,
                            const DecisionOptions& options = {}) noexcept;

Decision decide(const HeadSummary& heads, double orientation,
                const DecisionOptions& options = {}) noexcept;

inline bool grade_top1(const Top1Prediction& p, int truth) { return p.value == truth; }
inline bool grade_top2(const PredictionPair& p, int truth) {
  return p.holistic == truth || p.composed == truth;
}

// One externally produced prediction, as found in a scoring CSV with the
// header a1,p1,a2,p2,a3,p3,a4,orientation_deg,ground_truth.
struct ScoredRow {
  HeadSummary heads;
  double orientation = 0.0;
  int truth = 100;
};

// Throws FormatError on malformed rows, IoError if the file can't be read.
std::vector<ScoredRow> read_prediction_csv(std::istream& in);
std::vector<ScoredRow> read_prediction_csv(const std::filesystem::path& path);

}  // namespace jnr

#endif  // JNR_DECISION_HPP_

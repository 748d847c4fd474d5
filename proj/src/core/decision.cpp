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

#include "jnr/decision.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "jnr/error.hpp"
#include "jnr/labels.hpp"

namespace jnr {

int refine_digit_count(int tens_pred, int count_pred, double orientation) noexcept {
  const bool in_window =
      orientation >= kRefineWindowLow && orientation <= kRefineWindowHigh;
  if (in_window && tens_pred != kAbsentDigit && tens_pred != 0) return 2;
  return count_pred;
}

Top1Prediction select_top1(int holistic_pred, int tens_pred, int ones_pred,
                           int refined_count, double p_holistic, double p_tens,
                           double p_ones, bool chance_normalized) noexcept {
  if (chance_normalized) {
    p_holistic *= kHolisticClasses;
    p_tens *= kDigitClasses;
    p_ones *= kDigitClasses;
  }
  const int combined = compose_number(tens_pred, ones_pred, refined_count);
  Top1Prediction out;
  if (p_holistic > p_tens && p_holistic > p_ones) {
    out = {holistic_pred, true};
  } else {
    out = {combined, false};
  }
  if (refined_count == 0) out.value = kInvisibleNumber;
  return out;
}

namespace {

int refined(const HeadSummary& h, double orientation, const DecisionOptions& o) {
  return o.refine_count ? refine_digit_count(h.argmax[1], h.argmax[3], orientation)
                        : h.argmax[3];
}

}  // namespace

PredictionPair predict_pair(const HeadSummary& heads, double orientation,
                            const DecisionOptions& options) noexcept {
  const int count = refined(heads, orientation, options);
  PredictionPair pair{heads.argmax[0],
                      compose_number(heads.argmax[1], heads.argmax[2], count)};
  if (count == 0) pair.composed = kInvisibleNumber;
  return pair;
}

Decision decide(const HeadSummary& heads, double orientation,
                const DecisionOptions& options) noexcept {
  Decision d;
  d.refined_count = refined(heads, orientation, options);
  d.pair = {heads.argmax[0],
            compose_number(heads.argmax[1], heads.argmax[2], d.refined_count)};
  if (d.refined_count == 0) d.pair.composed = kInvisibleNumber;
  d.top1 = select_top1(heads.argmax[0], heads.argmax[1], heads.argmax[2],
                       d.refined_count, heads.max_prob[0], heads.max_prob[1],
                       heads.max_prob[2], options.chance_normalized);
  return d;
}

namespace {

[[noreturn]] void bad_row(std::size_t line, const std::string& why) {
  throw FormatError(FormatError::Reason::kInvalidSample,
                    "prediction csv line " + std::to_string(line) + ": " + why);
}

int parse_int(const std::string& s, int lo, int hi, std::size_t line) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(s, &used);
  } catch (const std::exception&) {
    bad_row(line, "not an integer: '" + s + "'");
  }
  if (used != s.size()) bad_row(line, "not an integer: '" + s + "'");
  if (v < lo || v > hi) bad_row(line, "value out of range: " + s);
  return v;
}

double parse_real(const std::string& s, double lo, double hi, std::size_t line) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    bad_row(line, "not a number: '" + s + "'");
  }
  if (used != s.size()) bad_row(line, "not a number: '" + s + "'");
  if (!(v >= lo && v <= hi)) bad_row(line, "value out of range: " + s);
  return v;
}

}  // namespace

std::vector<ScoredRow> read_prediction_csv(std::istream& in) {
  static const char* kHeader = "a1,p1,a2,p2,a3,p3,a4,orientation_deg,ground_truth";
  std::vector<ScoredRow> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line == kHeader) continue;

    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 9) bad_row(lineno, "expected 9 columns, got " + std::to_string(f.size()));

    ScoredRow r;
    r.heads.argmax[0] = parse_int(f[0], 0, 100, lineno);
    r.heads.max_prob[0] = parse_real(f[1], 0.0, 1.0, lineno);
    r.heads.argmax[1] = parse_int(f[2], 0, 10, lineno);
    r.heads.max_prob[1] = parse_real(f[3], 0.0, 1.0, lineno);
    r.heads.argmax[2] = parse_int(f[4], 0, 10, lineno);
    r.heads.max_prob[2] = parse_real(f[5], 0.0, 1.0, lineno);
    r.heads.argmax[3] = parse_int(f[6], 0, 2, lineno);
    r.orientation = parse_real(f[7], 0.0, 360.0, lineno);
    if (r.orientation >= 360.0) bad_row(lineno, "orientation must be < 360");
    r.truth = parse_int(f[8], 0, 100, lineno);
    rows.push_back(r);
  }
  return rows;
}

std::vector<ScoredRow> read_prediction_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_prediction_csv(in);
}

}  // namespace jnr

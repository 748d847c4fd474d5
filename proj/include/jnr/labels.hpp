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

// Label universe for jersey numbers.
//
//   holistic  0..99 is the printed number, 100 means "number invisible"
//   tens/ones 0..9 is the digit, 10 means "digit invisible or absent"
//   count     number of visible digits, 0..2
//
// Single-digit numbers carry tens = 10.

#ifndef JNR_LABELS_HPP_
#define JNR_LABELS_HPP_

namespace jnr {

inline constexpr int kInvisibleNumber = 100;
inline constexpr int kAbsentDigit = 10;

inline constexpr int kHolisticClasses = 101;
inline constexpr int kDigitClasses = 11;
inline constexpr int kCountClasses = 3;

inline constexpr double kOrientationBinWidth = 5.0;
inline constexpr int kOrientationBins = 72;

struct LabelSet {
  int holistic = kInvisibleNumber;
  int tens = kAbsentDigit;
  int ones = kAbsentDigit;
  int count = 0;

  friend bool operator==(const LabelSet&, const LabelSet&) = default;
};

// True iff the four fields are in range and mutually consistent.
bool is_consistent(const LabelSet& labels) noexcept;

// Throws DomainError unless 0 <= number <= 100.
LabelSet labels_from_number(int number);

// Digits plus count back to a holistic value. Contradictory combinations
// (count 2 with an absent tens digit, or any visible count with an absent
// ones digit) map to kInvisibleNumber so the prediction path stays total.
int compose_number(int tens, int ones, int count) noexcept;

// floor(degrees / 5); throws DomainError outside [0, 360).
int orientation_bin(double degrees);

}  // namespace jnr

#endif  // JNR_LABELS_HPP_

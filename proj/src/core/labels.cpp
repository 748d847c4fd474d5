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

#include "jnr/labels.hpp"

#include <cmath>
#include <string>

#include "jnr/error.hpp"

namespace jnr {

bool is_consistent(const LabelSet& l) noexcept {
  if (l.holistic < 0 || l.holistic > kInvisibleNumber) return false;
  if (l.tens < 0 || l.tens > kAbsentDigit) return false;
  if (l.ones < 0 || l.ones > kAbsentDigit) return false;
  switch (l.count) {
    case 0:
      return l.holistic == kInvisibleNumber && l.tens == kAbsentDigit &&
             l.ones == kAbsentDigit;
    case 1:
      return l.tens == kAbsentDigit && l.ones <= 9 && l.holistic == l.ones;
    case 2:
      return l.tens >= 1 && l.tens <= 9 && l.ones <= 9 &&
             l.holistic == 10 * l.tens + l.ones;
    default:
      return false;
  }
}

LabelSet labels_from_number(int number) {
  if (number < 0 || number > kInvisibleNumber) {
    throw DomainError("jersey number out of range [0, 100]: " +
                      std::to_string(number));
  }
  if (number == kInvisibleNumber) return LabelSet{};
  if (number < 10) return {number, kAbsentDigit, number, 1};
  return {number, number / 10, number % 10, 2};
}

int compose_number(int tens, int ones, int count) noexcept {
  if (ones < 0 || ones > 9) return kInvisibleNumber;
  switch (count) {
    case 1:
      return ones;
    case 2:
      if (tens < 0 || tens > 9) return kInvisibleNumber;
      return 10 * tens + ones;
    default:
      return kInvisibleNumber;
  }
}

int orientation_bin(double degrees) {
  if (!(degrees >= 0.0 && degrees < 360.0)) {
    throw DomainError("orientation outside [0, 360): " +
                      std::to_string(degrees));
  }
  const int bin = static_cast<int>(std::floor(degrees / kOrientationBinWidth));
  return bin < kOrientationBins ? bin : kOrientationBins - 1;
}

}  // namespace jnr

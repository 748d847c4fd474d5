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

#ifndef JNR_ERROR_HPP_
#define JNR_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace jnr {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A value outside the domain of an operation (bad label, bad shape, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Non-finite activation, loss or gradient.
class NumericError : public Error {
 public:
  using Error::Error;
};

// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Structurally invalid dataset or checkpoint file.
class FormatError : public Error {
 public:
  enum class Reason {
    kBadMagic,
    kVersionMismatch,
    kTruncated,
    kInvalidLabels,
    kInvalidSample,
    kTrailingData,
    kConfigMismatch,
  };

  FormatError(Reason reason, const std::string& what)
      : Error(what), reason_(reason) {}

  Reason reason() const noexcept { return reason_; }

 private:
  Reason reason_;
};

}  // namespace jnr

#endif  // JNR_ERROR_HPP_

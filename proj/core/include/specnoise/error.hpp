// Copyright 2026 The specnoise Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace specnoise {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on the arguments was violated (shape mismatch, bad parameter).
class InputError : public Error {
 public:
  using Error::Error;
};

/// File-system failure while reading or writing an artifact.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A tensor or config file could not be decoded.
class ParseError : public Error {
 public:
  enum class Kind { Magic, Header, Truncated, SizeMismatch, NonFinite, Format };

  ParseError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Numerical failure: the data do not support the requested computation.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// An inverse transform produced a non-negligible imaginary part.
class SymmetryViolation : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Too few usable samples survived filtering.
class InsufficientData : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// A regression produced a physically meaningless result.
class DegenerateFit : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Input is degenerate for the requested statistic (e.g. all rows constant).
class DegenerateInput : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace specnoise

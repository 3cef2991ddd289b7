// Copyright 2026 The gfact Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gfact {

// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

// A per-column (R-step) or per-row (C-step) least-squares system could not be
// solved. index() names the offending column or row.
class SingularSystemError : public Error {
 public:
  enum class Axis { kColumn, kRow };

  SingularSystemError(Axis axis, std::ptrdiff_t index, const std::string& what)
      : Error(what), axis_(axis), index_(index) {}

  Axis axis() const { return axis_; }
  std::ptrdiff_t index() const { return index_; }

 private:
  Axis axis_;
  std::ptrdiff_t index_;
};

class InitializationError : public Error {
 public:
  using Error::Error;
};

class CombinationError : public Error {
 public:
  using Error::Error;
};

class MergeConflictError : public Error {
 public:
  using Error::Error;
};

// Raised by the metric upgrade when the scene does not constrain a rigid
// 3-D solution (planar shape, rotation about the optical axis only, ...).
class DegenerateConfigurationError : public Error {
 public:
  using Error::Error;
};

}  // namespace gfact

// Copyright 2026 The lapflow Authors
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

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lapflow {

enum class ErrorKind {
  kInvalidArgument,
  kNumerical,
  kLocality,
  kIo,
};

/// Base exception for everything thrown by the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// A node read a value it is not allowed to see.
class LocalityViolation : public Error {
 public:
  LocalityViolation(int node, int round, const std::string& what)
      : Error(ErrorKind::kLocality, what), node_(node), round_(round) {}

  int node() const noexcept { return node_; }
  int round() const noexcept { return round_; }

 private:
  int node_;
  int round_;
};

/// An iterative estimate stopped before reaching its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> last_values)
      : Error(ErrorKind::kNumerical, what), last_(std::move(last_values)) {}

  const std::vector<double>& last_values() const noexcept { return last_; }

 private:
  std::vector<double> last_;
};

inline Error InvalidArgument(const std::string& what) {
  return Error(ErrorKind::kInvalidArgument, what);
}

inline Error NumericalFailure(const std::string& what) {
  return Error(ErrorKind::kNumerical, what);
}

}  // namespace lapflow

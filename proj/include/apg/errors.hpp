// Copyright 2026 The apg-control Authors
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

#ifndef APG_ERRORS_HPP_
#define APG_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace apg {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed configuration, checkpoint header, or architecture description.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Tensor/shape mismatch between operands or against a contract.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Physically invalid state fed to a dynamics step.
class InvalidStateError : public Error {
 public:
  using Error::Error;
};

// Unknown primitive or invalid use of the tape API.
class InvalidOperationError : public Error {
 public:
  using Error::Error;
};

// Non-finite values during rollout, reverse pass, or optimization.
// Carries the offending tape node when known (-1 otherwise).
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what, long node_id = -1)
      : Error(what), node_id_(node_id) {}
  long node_id() const { return node_id_; }

 private:
  long node_id_;
};

// Reference-trajectory generation could not produce a feasible result.
class GenerationError : public Error {
 public:
  using Error::Error;
};

}  // namespace apg

#endif  // APG_ERRORS_HPP_

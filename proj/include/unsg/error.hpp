// Copyright 2026 The UNSG Workbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef UNSG_ERROR_HPP_
#define UNSG_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace unsg {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An action, history or strategy does not belong to the instance it is used
// with.
class InstanceMismatchError : public Error {
 public:
  using Error::Error;
};

// Exact enumeration refused because the action space exceeds the cap.
class EnumerationOverflowError : public Error {
 public:
  using Error::Error;
};

// A replayed action steps into a child that is masked at its node.
class InconsistencyError : public Error {
 public:
  using Error::Error;
};

// The player has a single pure action, so prune-and-resample is undefined.
class DegenerateInstanceError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatchError : public Error {
 public:
  using Error::Error;
};

class InfeasibleParametersError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Raised when training produces non-finite values.
class TrainingAbortError : public Error {
 public:
  using Error::Error;
};

}  // namespace unsg

#endif  // UNSG_ERROR_HPP_

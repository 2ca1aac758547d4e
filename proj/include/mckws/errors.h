// mckws/errors.h

// Copyright 2026  The mckws Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef MCKWS_ERRORS_H_
#define MCKWS_ERRORS_H_

#include <stdexcept>
#include <string>

namespace mckws {

// Error categories map one-to-one onto the CLI exit codes
// (2 config, 3 data, 4 numeric divergence).

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string &what) : std::runtime_error(what) {}
};

class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string &what) : std::runtime_error(what) {}
};

class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string &what) : std::runtime_error(what) {}
};

/// Raised when training produces a non-finite loss; carries the step index.
class DivergenceError : public NumericError {
 public:
  DivergenceError(const std::string &what, long step)
      : NumericError(what), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

}  // namespace mckws

#endif  // MCKWS_ERRORS_H_

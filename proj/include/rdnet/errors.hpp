// Copyright 2026 The rdnet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RDNET_ERRORS_HPP
#define RDNET_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace rdnet {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument values (out-of-range tolerances, bad grid bounds, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Shape mismatches between matrices, models, and datasets.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Inputs that violate a numerical contract (asymmetry, indefiniteness,
/// degenerate spectra, collapsing feature columns).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Root search ran out of iterations; carries the best bracket seen.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double lo, double hi, double best,
                   double residual)
      : Error(what),
        bracket_lo(lo),
        bracket_hi(hi),
        best_value(best),
        best_residual(residual) {}

  double bracket_lo;
  double bracket_hi;
  double best_value;
  double best_residual;
};

/// Training aborted mid-run; carries the objective values recorded so far.
class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, std::vector<double> trace)
      : Error(what), objective_trace(std::move(trace)) {}

  std::vector<double> objective_trace;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// IDX file parsing failures, one code per distinct malformation.
class IdxError : public IoError {
 public:
  enum class Code { bad_magic, truncated, count_mismatch };

  IdxError(Code c, const std::string& what) : IoError(what), code(c) {}

  Code code;
};

}  // namespace rdnet

#endif  // RDNET_ERRORS_HPP

// Copyright 2026 The sgdlab Authors.
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

#ifndef SGDLAB_ERRORS_H_
#define SGDLAB_ERRORS_H_

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace sgdlab {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Operand shapes do not agree.
class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what) : Error(what) {}
};

// An argument violates a documented precondition (sign, range, definiteness).
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(what) {}
};

// Malformed configuration or data file.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error(what) {}
};

// An iterate or loss became NaN/Inf at `step`.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::int64_t step)
      : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}

  std::int64_t step() const { return step_; }

 private:
  std::int64_t step_;
};

// An iterative solver ran out of iterations. Carries the best iterate so
// callers can still inspect it.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, Eigen::VectorXd best,
                   double loss, double kkt_residual, std::int64_t iterations)
      : Error(what),
        best_(std::move(best)),
        loss_(loss),
        kkt_residual_(kkt_residual),
        iterations_(iterations) {}

  const Eigen::VectorXd& best() const { return best_; }
  double loss() const { return loss_; }
  double kkt_residual() const { return kkt_residual_; }
  std::int64_t iterations() const { return iterations_; }

 private:
  Eigen::VectorXd best_;
  double loss_;
  double kkt_residual_;
  std::int64_t iterations_;
};

}  // namespace sgdlab

#endif  // SGDLAB_ERRORS_H_

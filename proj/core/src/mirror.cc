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

#include "sgdlab/mirror.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "sgdlab/errors.h"

namespace sgdlab {
namespace {

void CheckAlpha(const Vec& alpha, Eigen::Index d, const char* what) {
  CheckSize(alpha, d, what);
  if (!(alpha.array() > 0.0).all()) {
    throw DomainError(std::string(what) + " must be positive");
  }
}

}  // namespace

double PhiValue(const Vec& beta, const Vec& alpha) {
  CheckAlpha(alpha, beta.size(), "PhiValue: alpha");
  const Eigen::ArrayXd b = beta.array();
  const Eigen::ArrayXd a2 = alpha.array().square();
  const Eigen::ArrayXd terms =
      b * (b / (2.0 * a2)).asinh() - (b.square() + 4.0 * a2.square()).sqrt();
  return 0.25 * terms.sum();
}

Vec PhiGrad(const Vec& beta, const Vec& alpha) {
  CheckAlpha(alpha, beta.size(), "PhiGrad: alpha");
  return (0.25 * (beta.array() / (2.0 * alpha.array().square())).asinh())
      .matrix();
}

Vec PhiGradInverse(const Vec& u, const Vec& alpha) {
  CheckAlpha(alpha, u.size(), "PhiGradInverse: alpha");
  return (2.0 * alpha.array().square() * (4.0 * u.array()).sinh()).matrix();
}

Vec PhiHessianDiag(const Vec& beta, const Vec& alpha) {
  CheckAlpha(alpha, beta.size(), "PhiHessianDiag: alpha");
  return (0.25 / (beta.array().square() + 4.0 * alpha.array().pow(4)).sqrt())
      .matrix();
}

double Bregman(const Vec& beta, const Vec& ref, const Vec& alpha) {
  CheckSize(ref, beta.size(), "Bregman: reference");
  return PhiValue(beta, alpha) - PhiValue(ref, alpha) -
         PhiGrad(ref, alpha).dot(beta - ref);
}

TiltedSolution SolveTilted(const Dataset& ds, const Vec& alpha,
                           const Vec& tilt,
                           const TiltedSolveOptions& options) {
  const int d = ds.d();
  CheckAlpha(alpha, d, "SolveTilted: alpha");
  CheckSize(tilt, d, "SolveTilted: tilt");
  const Mat complement = Mat::Identity(d, d) - RowSpaceProjector(ds.x);
  const double eta0 = options.step > 0.0 ? options.step : DefaultStepSize(ds);

  auto loss_at = [&](const Vec& b) {
    return 0.25 * (ds.xbar * b - ds.ybar).squaredNorm();
  };
  auto kkt_at = [&](const Vec& b) {
    return (complement * (PhiGrad(b, alpha) - tilt)).norm();
  };

  Vec u = tilt;
  Vec beta = PhiGradInverse(u, alpha);
  double loss = loss_at(beta);
  double eta = eta0;
  std::int64_t iter = 0;
  for (; iter < options.max_iters && !(loss <= options.tol); ++iter) {
    const Vec grad = 0.5 * (ds.xbar.transpose() * (ds.xbar * beta - ds.ybar));
    for (;;) {
      const Vec u_next = u - eta * grad;
      const Vec beta_next = PhiGradInverse(u_next, alpha);
      const double loss_next = loss_at(beta_next);
      if (loss_next <= loss) {
        u = u_next;
        beta = beta_next;
        loss = loss_next;
        eta = std::min(eta0, 1.25 * eta);
        break;
      }
      eta *= 0.5;
      if (eta < 1e-30 * eta0) {
        // No descent possible at this precision.
        iter = options.max_iters;
        break;
      }
    }
  }

  TiltedSolution sol;
  sol.beta = beta;
  sol.loss = loss;
  sol.kkt_residual = kkt_at(beta);
  sol.iterations = iter;
  if (!(loss <= options.tol) || !(sol.kkt_residual <= options.kkt_tol)) {
    throw ConvergenceError(
        "SolveTilted: no convergence (loss " + std::to_string(loss) +
            ", kkt " + std::to_string(sol.kkt_residual) + ")",
        sol.beta, sol.loss, sol.kkt_residual, sol.iterations);
  }
  return sol;
}

double MuBound(const Vec& alpha, double radius) {
  if (!(radius >= 0.0)) throw DomainError("MuBound: radius must be >= 0");
  if (alpha.size() == 0 || !(alpha.array() > 0.0).all()) {
    throw DomainError("MuBound: alpha must be positive");
  }
  const double a4 = alpha.array().pow(4).maxCoeff();
  return 1.0 / (4.0 * std::sqrt(radius * radius + 4.0 * a4));
}

DistanceBoundReport DistanceBoundCheck(const Vec& beta_inf,
                                       const Vec& beta_star, const Vec& r_inf,
                                       double mu, double abs_tol) {
  if (!(mu > 0.0)) {
    throw DomainError("DistanceBoundCheck: mu must be positive");
  }
  CheckSize(beta_star, beta_inf.size(), "DistanceBoundCheck: beta_star");
  DistanceBoundReport report;
  report.lhs = r_inf.norm() / mu;
  report.rhs = (beta_star - beta_inf).norm();
  report.satisfied = report.lhs + abs_tol >= report.rhs;
  return report;
}

}  // namespace sgdlab

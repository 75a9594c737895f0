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

#ifndef SGDLAB_MIRROR_H_
#define SGDLAB_MIRROR_H_

#include <cstdint>

#include "sgdlab/linalg.h"
#include "sgdlab/problems.h"

namespace sgdlab {

// Hyperbolic entropy
//   phi_alpha(beta) = 1/4 sum_i [beta_i asinh(beta_i / (2 alpha_i^2))
//                                - sqrt(beta_i^2 + 4 alpha_i^4)].
// All functions require alpha > 0 entrywise.
double PhiValue(const Vec& beta, const Vec& alpha);
// 1/4 asinh(beta / (2 alpha^2)).
Vec PhiGrad(const Vec& beta, const Vec& alpha);
// 2 alpha^2 sinh(4 u).
Vec PhiGradInverse(const Vec& u, const Vec& alpha);
// 1 / (4 sqrt(beta^2 + 4 alpha^4)).
Vec PhiHessianDiag(const Vec& beta, const Vec& alpha);
// phi(beta) - phi(ref) - <grad phi(ref), beta - ref>.
double Bregman(const Vec& beta, const Vec& ref, const Vec& alpha);

struct TiltedSolveOptions {
  std::int64_t max_iters = 1000000;
  double tol = 1e-12;       // stop when L(beta) <= tol
  double kkt_tol = 1e-6;    // required ||(I - P)(grad phi(beta) - tilt)||
  double step = 0.0;        // 0 means DefaultStepSize(ds)
};

struct TiltedSolution {
  Vec beta;
  double loss = 0.0;
  double kkt_residual = 0.0;
  std::int64_t iterations = 0;
};

// argmin over {X beta = Y} of phi_alpha(beta) - <tilt, beta>, by mirror
// descent in the dual: u_0 = tilt, u <- u - eta grad L(beta(u)) with the DLN
// loss L. The step is halved whenever the loss would increase. Throws
// ConvergenceError (carrying the best iterate) if the loss or the KKT residual
// tolerance is not met within max_iters.
TiltedSolution SolveTilted(const Dataset& ds, const Vec& alpha,
                           const Vec& tilt,
                           const TiltedSolveOptions& options = {});

// Strong convexity modulus of phi_alpha on the ball of radius `radius`:
// 1 / (4 sqrt(radius^2 + 4 max_i alpha_i^4)).
double MuBound(const Vec& alpha, double radius);

struct DistanceBoundReport {
  double lhs = 0.0;  // ||r_inf|| / mu
  double rhs = 0.0;  // ||beta_star - beta_inf||
  bool satisfied = false;
};

// Checks ||r_inf|| / mu >= ||beta_star - beta_inf||, allowing rhs to exceed
// lhs by abs_tol (solver tolerance).
DistanceBoundReport DistanceBoundCheck(const Vec& beta_inf,
                                       const Vec& beta_star, const Vec& r_inf,
                                       double mu, double abs_tol = 0.0);

}  // namespace sgdlab

#endif  // SGDLAB_MIRROR_H_

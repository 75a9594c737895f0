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

#ifndef SGDLAB_LSQ_H_
#define SGDLAB_LSQ_H_

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "sgdlab/format.h"
#include "sgdlab/linalg.h"
#include "sgdlab/problems.h"
#include "sgdlab/rng.h"

namespace sgdlab {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class OptimizerKind { kGD, kSGD, kNoisySGD, kDPSGD };

const char* OptimizerName(OptimizerKind kind);
// Accepts "gd", "sgd", "noisy_sgd", "dpsgd".
OptimizerKind ParseOptimizer(const std::string& name);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kGD;
  double gamma = 0.01;      // step size
  double sigma = 0.0;       // injected noise scale
  double eps_floor = 0.5;   // SGD noise floor of the underparameterized SDE
  int batch = 1;
  double clip = kInfinity;  // per-sample clipping threshold (DP-SGD)
  double sde_step = 0.0;    // Euler-Maruyama step; 0 means use gamma
  std::uint64_t seed = 0;

  double SdeStep() const { return sde_step > 0.0 ? sde_step : gamma; }
};

struct LsqState {
  Vec theta;
  std::int64_t step = 0;
  double time = 0.0;
};

struct StationaryLaw {
  Vec mean;
  Mat cov;
};

// Returns C g / ||g|| when ||g|| >= C, else g.
Vec Clip(const Vec& g, double c);

// R_n(theta) = (1/2n) ||X theta - Y||^2.
double LsqLoss(const Vec& theta, const Dataset& ds);

// One step of GD / SGD / Noisy-SGD / DP-SGD on R_n. Minibatches are drawn
// uniformly without replacement; all randomness comes from `rng` and noise is
// only drawn when its scale is nonzero.
LsqState LsqDiscreteStep(const LsqState& state, const Dataset& ds,
                         const OptimizerConfig& cfg, RngStream& rng);

// Least-squares solution theta^LS (requires X^T X invertible).
Vec LeastSquaresSolution(const Dataset& ds);

// Closed-form stationary law of the underparameterized SDE, the solution of
// B W + W B = gamma eps^2 B + sigma^2 I with B = Xbar^T Xbar:
// N(theta^LS, (gamma eps^2 / 2) I + (sigma^2 / 2) B^{-1}).
StationaryLaw StationaryLawTheory(const Dataset& ds, double gamma, double eps,
                                  double sigma);

struct OuOptions {
  std::int64_t steps = 1000000;
  std::int64_t burn_in = -1;  // -1 means 10% of steps
  int thin = 10;
  int batches = 30;           // batch means for the standard error
  std::int64_t record_stride = 1000;
};

struct OuResult {
  Vec mean;
  Mat cov;
  Vec std_error;          // per coordinate, from batch means
  std::int64_t samples = 0;
  // Columns t, loss, eta, bound_rhs, theta_norm. Here eta is the squared
  // distance to theta^LS and bound_rhs its stationary expectation Tr(cov).
  Table trajectory;
};

// Euler-Maruyama simulation of
//   d theta = -Xbar^T (Xbar theta - Ybar) dt
//             + sqrt(gamma) eps Xbar^T dW + sigma dW~
// from theta = 0 with step cfg.SdeStep(), gamma = cfg.gamma,
// eps = cfg.eps_floor and sigma = cfg.sigma.
OuResult SimulateOuUnder(const Dataset& ds, const OptimizerConfig& cfg,
                         const OuOptions& options, RngStream& rng);

struct CoupledOptions {
  std::int64_t steps = 2000;
  double h = 0.0;  // 0 means h = gamma
  int n_traj = 200;
  std::int64_t record_stride = 10;
  int workers = 0;
};

struct EtaReport {
  std::vector<double> t;
  std::vector<double> mean_eta;
  std::vector<double> mean_loss_integral;
  std::vector<double> bound_rhs;
  std::vector<double> mean_loss;
  std::vector<double> mean_theta_norm;
  // Per-trajectory values at every record, indexed [trajectory][record].
  std::vector<std::vector<double>> eta;
  std::vector<std::vector<double>> loss_integral;

  // Columns t, loss, eta, bound_rhs, theta_norm (means over trajectories).
  Table ToTable() const;
};

// Couples the clean SDE
//   d theta = -Xbar^T r(theta) dt + sqrt(gamma R_n(theta)) Xbar^T dB
// with the noisy one
//   d beta = -Xbar^T r(beta) dt + sqrt(gamma R_n(beta)) (Xbar^T dB + sigma dB~)
// driven by the same B. Both start at 0. Trajectory k uses the streams of
// trajectory k under `seed`. Requires d > n and gamma <= 1 / Tr(Xbar^T Xbar).
EtaReport SimulateCoupledOver(const Dataset& ds, double gamma, double sigma,
                              std::uint64_t seed,
                              const CoupledOptions& options);

// gamma * d * sigma^2 * loss_integral.
double EtaBoundRhs(double gamma, int d, double sigma, double loss_integral);

}  // namespace sgdlab

#endif  // SGDLAB_LSQ_H_

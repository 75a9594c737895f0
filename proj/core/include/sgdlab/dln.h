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

#ifndef SGDLAB_DLN_H_
#define SGDLAB_DLN_H_

#include <cstdint>
#include <functional>
#include <vector>

#include "sgdlab/format.h"
#include "sgdlab/linalg.h"
#include "sgdlab/lsq.h"
#include "sgdlab/problems.h"
#include "sgdlab/rng.h"

namespace sgdlab {

// State of the two-layer diagonal network beta = w+^2 - w-^2.
struct DlnState {
  Vec w_plus;
  Vec w_minus;
  std::int64_t step = 0;
  double time = 0.0;
  double loss_integral = 0.0;      // left Riemann sum of L
  Vec r_acc;                       // injected noise projected off row(X)
  double noise_sq_integral = 0.0;  // integral of ||sigma_t||_F^2

  Vec Beta() const;
  // w+ = w- = alpha, everything else zero.
  static DlnState Init(const Vec& alpha);
};

// Injected noise. kLossScaled uses sigma_t = 2 sigma sqrt(L(w_t)) times the
// identity. kGeneral uses deterministic, piecewise constant matrices: piece k
// (a p' x d matrix) is active on [boundaries[k], boundaries[k+1]) and the
// noise is zero outside [boundaries.front(), boundaries.back()).
class NoiseSchedule {
 public:
  enum class Kind { kLossScaled, kGeneral };

  static NoiseSchedule LossScaled(double sigma);
  // Throws DomainError unless the schedule is well formed and the integral of
  // ||sigma_t||_F^2 is at most 1.
  static NoiseSchedule General(std::vector<double> boundaries,
                               std::vector<Mat> pieces);

  Kind kind() const { return kind_; }
  double sigma() const { return sigma_; }
  // Active matrix at time t, or nullptr when the noise is off.
  const Mat* PieceAt(double t) const;
  // Number of rows p' of the general matrices (0 for kLossScaled).
  int NoiseDim() const;
  // Integral of ||sigma_t||_F^2 over all time (general schedules only).
  double SquaredNormIntegral() const;

 private:
  Kind kind_ = Kind::kLossScaled;
  double sigma_ = 0.0;
  std::vector<double> boundaries_;
  std::vector<Mat> pieces_;
};

// L(beta) = (1/4n) ||X beta - Y||^2 = (1/4) ||Xbar beta - Ybar||^2.
double DlnLoss(const Vec& beta, const Dataset& ds);
// grad L(beta) = (1/2) Xbar^T (Xbar beta - Ybar).
Vec DlnLossGradient(const Vec& beta, const Dataset& ds);

// Quantities shared by every step on one dataset.
struct DlnContext {
  const Dataset* ds = nullptr;
  Mat complement;  // I - P, P the projector onto row(X)
  Vec gram_diag;   // diag(Xbar^T Xbar)

  explicit DlnContext(const Dataset& dataset);
};

// Independent streams of one trajectory.
struct DlnStreams {
  RngStream batch;
  RngStream gradient;
  RngStream plus;
  RngStream minus;

  static DlnStreams For(std::uint64_t seed, std::uint64_t trajectory);
};

// One step of GD, SGD or Noisy-SGD on the diagonal network:
//   w+ <- w+ o (1 - 2 gamma g + gamma sigma_t Z+)
//   w- <- w- o (1 + 2 gamma g - gamma sigma_t Z-)
// where g is the full (GD) or minibatch (SGD) gradient of L in beta and the
// Z terms are present for Noisy-SGD only. Throws DivergenceError on a
// non-finite iterate.
void DlnDiscreteStep(DlnState& state, const DlnContext& ctx,
                     const OptimizerConfig& cfg, const NoiseSchedule& sched,
                     DlnStreams& streams);

// r_acc += sigma sqrt(gamma loss) (I - P) increment.
void AccumulateRInfinity(DlnState& state, const Mat& complement,
                         const Vec& increment, double gamma, double loss,
                         double sigma);

// alpha0 o exp(-2 gamma sigma^2 int L) o exp(-2 gamma diag(Xbar^T Xbar) int L).
Vec EffectiveAlpha(const Vec& alpha0, const Dataset& ds, double gamma,
                   double sigma, double loss_integral);

// 2 alpha^2 o sinh(4 r): the point whose mirror-map image is r.
Vec EffectiveInit(const Vec& alpha_inf, const Vec& r_inf);

struct DlnRunOptions {
  std::int64_t max_steps = 200000;
  std::int64_t record_stride = 100;
  double converge_tol = 1e-12;
  int converge_window = 100;
  bool stop_when_converged = true;
};

struct DlnRunResult {
  DlnState final_state;
  bool converged = false;
  std::int64_t steps_run = 0;
  // Columns t, loss, dist_to_beta_l0_sq, loss_integral, r_acc_norm. Records
  // are on the grid 0, stride, 2 stride, ..., max_steps; after an early stop
  // the remaining rows repeat the final values.
  Table trajectory;
};

// Runs the discrete dynamics from w+ = w- = alpha.
DlnRunResult RunDlnDiscrete(const DlnContext& ctx, const Vec& alpha,
                            const OptimizerConfig& cfg,
                            const NoiseSchedule& sched, std::uint64_t seed,
                            std::uint64_t trajectory,
                            const DlnRunOptions& options);

enum class SdeScheme {
  // Exact multiplicative update of log w: closed forms for beta,
  // alpha_t and the mirror variable hold to rounding error for any h.
  kLogEuler,
  // Plain Euler-Maruyama on w.
  kEulerMaruyama,
};

// Running sums of the driving terms, exposed for closed-form checks.
struct SdeAccumulators {
  Vec eta;    // -int Xbar^T r ds + 2 sqrt(gamma) int sqrt(L) A^T dB
  Vec delta;  // 2 int sigma_s^T dB~ (general schedules)
  // log(alpha^2) - 4 gamma diag(A^T A) int L - 4 int diag(sigma^T sigma)
  Vec log_alpha_sq;
};

struct DlnSdeOptions {
  DlnRunOptions run;
  SdeScheme scheme = SdeScheme::kLogEuler;
  // Called at every recorded step (before stopping or padding).
  std::function<void(const DlnState&, const SdeAccumulators&)> observer;
};

// Simulates
//   dw+- = -+ (Xbar^T r) o w+- dt
//          +- 2 sqrt(gamma L) w+- o (Xbar^T dB + sigma dB~)
//          +- 2 w+- o (sigma_t^T dB')
// with step h from w+ = w- = alpha. Both signs share the same increments
// with opposite signs. sigma comes from a loss-scaled schedule, sigma_t from
// a general one.
DlnRunResult SimulateDlnSde(const DlnContext& ctx, const Vec& alpha,
                            const NoiseSchedule& sched, double gamma, double h,
                            std::uint64_t seed, std::uint64_t trajectory,
                            const DlnSdeOptions& options);

}  // namespace sgdlab

#endif  // SGDLAB_DLN_H_

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

#include "sgdlab/dln.h"

#include <cmath>
#include <limits>
#include <string>

#include "sgdlab/errors.h"

namespace sgdlab {

Vec DlnState::Beta() const {
  return (w_plus.array().square() - w_minus.array().square()).matrix();
}

DlnState DlnState::Init(const Vec& alpha) {
  if (alpha.size() == 0 || !(alpha.array() > 0.0).all() || !alpha.allFinite()) {
    throw DomainError("DlnState::Init: alpha must be positive and finite");
  }
  DlnState s;
  s.w_plus = alpha;
  s.w_minus = alpha;
  s.r_acc = Vec::Zero(alpha.size());
  return s;
}

NoiseSchedule NoiseSchedule::LossScaled(double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw DomainError("NoiseSchedule: sigma must be finite and >= 0");
  }
  NoiseSchedule s;
  s.kind_ = Kind::kLossScaled;
  s.sigma_ = sigma;
  return s;
}

NoiseSchedule NoiseSchedule::General(std::vector<double> boundaries,
                                     std::vector<Mat> pieces) {
  if (pieces.empty() || boundaries.size() != pieces.size() + 1) {
    throw DomainError("NoiseSchedule: need one more boundary than pieces");
  }
  for (size_t k = 0; k + 1 < boundaries.size(); ++k) {
    if (!(boundaries[k] >= 0.0) || !(boundaries[k + 1] > boundaries[k]) ||
        !std::isfinite(boundaries[k + 1])) {
      throw DomainError("NoiseSchedule: boundaries must increase from >= 0");
    }
  }
  const Eigen::Index rows = pieces[0].rows();
  const Eigen::Index cols = pieces[0].cols();
  for (const Mat& m : pieces) {
    if (m.rows() != rows || m.cols() != cols || rows == 0) {
      throw DimensionError("NoiseSchedule: pieces must share a shape");
    }
    if (!m.allFinite()) throw DomainError("NoiseSchedule: non-finite piece");
  }
  NoiseSchedule s;
  s.kind_ = Kind::kGeneral;
  s.boundaries_ = std::move(boundaries);
  s.pieces_ = std::move(pieces);
  if (s.SquaredNormIntegral() > 1.0) {
    throw DomainError("NoiseSchedule: integral of ||sigma_t||^2 exceeds 1");
  }
  return s;
}

const Mat* NoiseSchedule::PieceAt(double t) const {
  if (kind_ != Kind::kGeneral || t < boundaries_.front() ||
      t >= boundaries_.back()) {
    return nullptr;
  }
  size_t k = 0;
  while (t >= boundaries_[k + 1]) ++k;
  return &pieces_[k];
}

int NoiseSchedule::NoiseDim() const {
  return kind_ == Kind::kGeneral ? static_cast<int>(pieces_[0].rows()) : 0;
}

double NoiseSchedule::SquaredNormIntegral() const {
  double total = 0.0;
  for (size_t k = 0; k < pieces_.size(); ++k) {
    total += pieces_[k].squaredNorm() * (boundaries_[k + 1] - boundaries_[k]);
  }
  return total;
}

double DlnLoss(const Vec& beta, const Dataset& ds) {
  CheckSize(beta, ds.d(), "DlnLoss: beta");
  return 0.25 * (ds.xbar * beta - ds.ybar).squaredNorm();
}

Vec DlnLossGradient(const Vec& beta, const Dataset& ds) {
  CheckSize(beta, ds.d(), "DlnLossGradient: beta");
  return 0.5 * (ds.xbar.transpose() * (ds.xbar * beta - ds.ybar));
}

DlnContext::DlnContext(const Dataset& dataset) : ds(&dataset) {
  const int d = dataset.d();
  complement = Mat::Identity(d, d) - RowSpaceProjector(dataset.x);
  gram_diag = dataset.xbar.colwise().squaredNorm().transpose();
}

DlnStreams DlnStreams::For(std::uint64_t seed, std::uint64_t trajectory) {
  return {RngStream::For(seed, trajectory, StreamRole::kBatch),
          RngStream::For(seed, trajectory, StreamRole::kGradient),
          RngStream::For(seed, trajectory, StreamRole::kNoisePlus),
          RngStream::For(seed, trajectory, StreamRole::kNoiseMinus)};
}

namespace {

void CheckSchedule(const NoiseSchedule& sched, int d) {
  if (sched.kind() == NoiseSchedule::Kind::kGeneral) {
    if (sched.PieceAt(0.0) != nullptr && sched.PieceAt(0.0)->cols() != d) {
      throw DimensionError("noise schedule width does not match d");
    }
  }
}

void CheckAlpha(const Vec& alpha, int d) {
  CheckSize(alpha, d, "alpha");
  if (!(alpha.array() > 0.0).all()) throw DomainError("alpha must be > 0");
}

}  // namespace

void DlnDiscreteStep(DlnState& state, const DlnContext& ctx,
                     const OptimizerConfig& cfg, const NoiseSchedule& sched,
                     DlnStreams& streams) {
  const Dataset& ds = *ctx.ds;
  const int n = ds.n();
  const int d = ds.d();
  CheckSize(state.w_plus, d, "DlnDiscreteStep: w+");
  CheckSize(state.w_minus, d, "DlnDiscreteStep: w-");
  if (!(cfg.gamma > 0.0)) throw DomainError("DlnDiscreteStep: gamma <= 0");
  if (cfg.kind == OptimizerKind::kDPSGD) {
    throw DomainError("DlnDiscreteStep: DP-SGD is not defined for DLN");
  }
  const double gamma = cfg.gamma;

  const Vec beta = state.Beta();
  const Vec residual = ds.x * beta - ds.y;
  const double loss = residual.squaredNorm() / (4.0 * n);
  if (!std::isfinite(loss) || !beta.allFinite()) {
    throw DivergenceError("DLN iterate diverged", state.step);
  }

  Vec g;
  if (cfg.kind == OptimizerKind::kGD) {
    g = ds.x.transpose() * residual / (2.0 * n);
  } else {
    if (cfg.batch < 1 || cfg.batch > n) {
      throw DomainError("DlnDiscreteStep: batch must be in [1, n]");
    }
    g = Vec::Zero(d);
    for (int i : streams.batch.SampleWithoutReplacement(n, cfg.batch)) {
      g += residual(i) * ds.x.row(i).transpose();
    }
    g /= 2.0 * cfg.batch;
  }

  Eigen::ArrayXd up = 1.0 - 2.0 * gamma * g.array();
  Eigen::ArrayXd down = 1.0 + 2.0 * gamma * g.array();
  if (cfg.kind == OptimizerKind::kNoisySGD) {
    const double time = state.time;
    if (sched.kind() == NoiseSchedule::Kind::kLossScaled) {
      const double sigma_t = 2.0 * sched.sigma() * std::sqrt(loss);
      Vec z_plus(d), z_minus(d);
      streams.plus.FillNormal(z_plus);
      streams.minus.FillNormal(z_minus);
      up += gamma * sigma_t * z_plus.array();
      down -= gamma * sigma_t * z_minus.array();
      // Mirror-variable noise is gamma sigma_t (Z+ + Z-) / 4, i.e. the
      // Brownian increment sqrt(gamma) (Z+ + Z-) / 2.
      const Vec increment = std::sqrt(gamma) * 0.5 * (z_plus + z_minus);
      AccumulateRInfinity(state, ctx.complement, increment, gamma, loss,
                          sched.sigma());
      state.noise_sq_integral += gamma * d * sigma_t * sigma_t;
    } else if (const Mat* piece = sched.PieceAt(time)) {
      const int p = static_cast<int>(piece->rows());
      Vec z_plus(p), z_minus(p);
      streams.plus.FillNormal(z_plus);
      streams.minus.FillNormal(z_minus);
      const Vec n_plus = piece->transpose() * z_plus;
      const Vec n_minus = piece->transpose() * z_minus;
      up += gamma * n_plus.array();
      down -= gamma * n_minus.array();
      state.r_acc += ctx.complement * (0.25 * gamma * (n_plus + n_minus));
      state.noise_sq_integral += gamma * piece->squaredNorm();
    }
  }

  state.w_plus.array() *= up;
  state.w_minus.array() *= down;
  state.loss_integral += gamma * loss;
  state.step += 1;
  state.time = state.step * gamma;
  if (!state.w_plus.allFinite() || !state.w_minus.allFinite()) {
    throw DivergenceError("DLN iterate diverged", state.step);
  }
}

void AccumulateRInfinity(DlnState& state, const Mat& complement,
                         const Vec& increment, double gamma, double loss,
                         double sigma) {
  const Eigen::Index d = state.r_acc.size();
  CheckShape(complement, d, d, "AccumulateRInfinity: I - P");
  CheckSize(increment, d, "AccumulateRInfinity: increment");
  if (sigma == 0.0) return;
  state.r_acc += (sigma * std::sqrt(gamma * loss)) * (complement * increment);
}

Vec EffectiveAlpha(const Vec& alpha0, const Dataset& ds, double gamma,
                   double sigma, double loss_integral) {
  CheckSize(alpha0, ds.d(), "EffectiveAlpha: alpha0");
  const Vec gram_diag = ds.xbar.colwise().squaredNorm().transpose();
  const Eigen::ArrayXd a =
      alpha0.array() * std::exp(-2.0 * gamma * sigma * sigma * loss_integral);
  return (a * (-2.0 * gamma * loss_integral * gram_diag.array()).exp())
      .matrix();
}

Vec EffectiveInit(const Vec& alpha_inf, const Vec& r_inf) {
  CheckSize(r_inf, alpha_inf.size(), "EffectiveInit: r");
  return (2.0 * alpha_inf.array().square() * (4.0 * r_inf.array()).sinh())
      .matrix();
}

namespace {

// Tracks convergence and writes padded trajectory records.
class Recorder {
 public:
  Recorder(const Dataset& ds, const DlnRunOptions& options, double dt)
      : ds_(ds), options_(options), dt_(dt) {
    if (options.max_steps < 0 || options.record_stride < 1 ||
        options.converge_window < 1) {
      throw DomainError("DLN run: bad options");
    }
    table_.columns = {"t", "loss", "dist_to_beta_l0_sq", "loss_integral",
                      "r_acc_norm"};
  }

  // Returns true when the run should stop before taking step `state.step`.
  bool Observe(const DlnState& state, double loss) {
    if (!std::isfinite(loss)) {
      throw DivergenceError("DLN loss is not finite", state.step);
    }
    below_ = loss <= options_.converge_tol ? below_ + 1 : 0;
    if (below_ >= options_.converge_window) converged_ = true;
    const bool stop = state.step >= options_.max_steps ||
                      (converged_ && options_.stop_when_converged);
    if (state.step % options_.record_stride == 0) {
      last_ = Row(state, state.step, loss);
      table_.AddRow(last_);
    }
    return stop;
  }

  void Finish(const DlnState& state, double loss) {
    if (state.step % options_.record_stride != 0) {
      last_ = Row(state, state.step, loss);
    }
    for (std::int64_t s = (state.step / options_.record_stride + 1) *
                          options_.record_stride;
         s <= options_.max_steps; s += options_.record_stride) {
      std::vector<double> row = last_;
      row[0] = s * dt_;
      table_.AddRow(std::move(row));
    }
  }

  bool converged() const { return converged_; }
  Table& table() { return table_; }

 private:
  std::vector<double> Row(const DlnState& state, std::int64_t step,
                          double loss) const {
    double dist = std::numeric_limits<double>::quiet_NaN();
    if (ds_.beta_star) dist = (state.Beta() - *ds_.beta_star).squaredNorm();
    return {step * dt_, loss, dist, state.loss_integral, state.r_acc.norm()};
  }

  const Dataset& ds_;
  const DlnRunOptions& options_;
  double dt_;
  Table table_;
  std::vector<double> last_;
  int below_ = 0;
  bool converged_ = false;
};

}  // namespace

DlnRunResult RunDlnDiscrete(const DlnContext& ctx, const Vec& alpha,
                            const OptimizerConfig& cfg,
                            const NoiseSchedule& sched, std::uint64_t seed,
                            std::uint64_t trajectory,
                            const DlnRunOptions& options) {
  const Dataset& ds = *ctx.ds;
  CheckAlpha(alpha, ds.d());
  CheckSchedule(sched, ds.d());
  DlnStreams streams = DlnStreams::For(seed, trajectory);
  Recorder recorder(ds, options, cfg.gamma);
  DlnState state = DlnState::Init(alpha);
  while (!recorder.Observe(state, DlnLoss(state.Beta(), ds))) {
    DlnDiscreteStep(state, ctx, cfg, sched, streams);
  }
  recorder.Finish(state, DlnLoss(state.Beta(), ds));
  DlnRunResult result;
  result.converged = recorder.converged();
  result.steps_run = state.step;
  result.trajectory = std::move(recorder.table());
  result.final_state = std::move(state);
  return result;
}

DlnRunResult SimulateDlnSde(const DlnContext& ctx, const Vec& alpha,
                            const NoiseSchedule& sched, double gamma, double h,
                            std::uint64_t seed, std::uint64_t trajectory,
                            const DlnSdeOptions& options) {
  const Dataset& ds = *ctx.ds;
  const int n = ds.n();
  const int d = ds.d();
  CheckAlpha(alpha, d);
  CheckSchedule(sched, d);
  if (!(gamma > 0.0) || !(h > 0.0)) {
    throw DomainError("SimulateDlnSde: gamma and h must be positive");
  }
  const bool general = sched.kind() == NoiseSchedule::Kind::kGeneral;
  const double sigma = general ? 0.0 : sched.sigma();
  const double sqrt_h = std::sqrt(h);

  RngStream gradient_rng = RngStream::For(seed, trajectory,
                                          StreamRole::kGradient);
  RngStream added_rng = RngStream::For(seed, trajectory,
                                       StreamRole::kNoisePlus);
  Recorder recorder(ds, options.run, h);
  DlnState state = DlnState::Init(alpha);
  SdeAccumulators acc{Vec::Zero(d), Vec::Zero(d),
                      (2.0 * alpha.array().log()).matrix()};
  const Eigen::ArrayXd diag_a = ctx.gram_diag.array() + sigma * sigma;

  Vec db(n), db_tilde(d), db_general;
  for (;;) {
    const Vec beta = state.Beta();
    const Vec r = ds.xbar * beta - ds.ybar;
    const double loss = 0.25 * r.squaredNorm();
    const bool stop = recorder.Observe(state, loss);
    if (options.observer && state.step % options.run.record_stride == 0) {
      options.observer(state, acc);
    }
    if (stop) {
      recorder.Finish(state, loss);
      break;
    }

    gradient_rng.FillNormal(db);
    db *= sqrt_h;
    const double amp = 2.0 * std::sqrt(gamma * loss);
    const Vec drift = -h * (ds.xbar.transpose() * r);
    Vec d_eta = drift + amp * (ds.xbar.transpose() * db);
    if (sigma > 0.0) {
      added_rng.FillNormal(db_tilde);
      db_tilde *= sqrt_h;
      d_eta += (amp * sigma) * db_tilde;
      AccumulateRInfinity(state, ctx.complement, db_tilde, gamma, loss, sigma);
    }
    Vec d_delta = Vec::Zero(d);
    Eigen::ArrayXd general_var = Eigen::ArrayXd::Zero(d);
    if (const Mat* piece = general ? sched.PieceAt(state.time) : nullptr) {
      db_general.resize(piece->rows());
      added_rng.FillNormal(db_general);
      db_general *= sqrt_h;
      d_delta = 2.0 * (piece->transpose() * db_general);
      general_var = piece->colwise().squaredNorm().transpose().array();
      state.r_acc += ctx.complement * (0.5 * d_delta);
      state.noise_sq_integral += h * piece->squaredNorm();
    }
    const Vec d_m = d_eta + d_delta;

    if (options.scheme == SdeScheme::kLogEuler) {
      const Eigen::ArrayXd decay =
          (2.0 * gamma * loss) * h * diag_a + 2.0 * h * general_var;
      state.w_plus.array() *= (d_m.array() - decay).exp();
      state.w_minus.array() *= (-d_m.array() - decay).exp();
      acc.log_alpha_sq.array() -= 2.0 * decay;
    } else {
      state.w_plus.array() *= 1.0 + d_m.array();
      state.w_minus.array() *= 1.0 - d_m.array();
      acc.log_alpha_sq.array() -=
          2.0 * ((2.0 * gamma * loss) * h * diag_a + 2.0 * h * general_var);
    }
    acc.eta += d_eta;
    acc.delta += d_delta;
    state.loss_integral += loss * h;
    state.step += 1;
    state.time = state.step * h;
    if (!state.w_plus.allFinite() || !state.w_minus.allFinite()) {
      throw DivergenceError("DLN SDE iterate diverged", state.step);
    }
  }

  DlnRunResult result;
  result.converged = recorder.converged();
  result.steps_run = state.step;
  result.trajectory = std::move(recorder.table());
  result.final_state = std::move(state);
  return result;
}

}  // namespace sgdlab

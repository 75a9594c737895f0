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

#include "sgdlab/lsq.h"

#include <algorithm>
#include <cmath>

#include "sgdlab/errors.h"
#include "sgdlab/parallel.h"

namespace sgdlab {
namespace {

void CheckFinite(const Vec& v, std::int64_t step, const char* what) {
  if (!v.allFinite()) throw DivergenceError(std::string(what), step);
}

// Mean of (optionally clipped) per-sample gradients over `rows`, summed in
// the given order.
Vec MeanSampleGradient(const Dataset& ds, const Vec& theta,
                       const std::vector<int>& rows, double clip) {
  Vec g = Vec::Zero(ds.d());
  for (int i : rows) {
    const double r = ds.x.row(i).dot(theta) - ds.y(i);
    Vec gi = r * ds.x.row(i).transpose();
    g += Clip(gi, clip);
  }
  return g / static_cast<double>(rows.size());
}

std::vector<int> SortedBatch(const Dataset& ds, int batch, RngStream& rng) {
  std::vector<int> rows = rng.SampleWithoutReplacement(ds.n(), batch);
  std::sort(rows.begin(), rows.end());
  return rows;
}

}  // namespace

const char* OptimizerName(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::kGD:
      return "gd";
    case OptimizerKind::kSGD:
      return "sgd";
    case OptimizerKind::kNoisySGD:
      return "noisy_sgd";
    case OptimizerKind::kDPSGD:
      return "dpsgd";
  }
  return "?";
}

OptimizerKind ParseOptimizer(const std::string& name) {
  if (name == "gd") return OptimizerKind::kGD;
  if (name == "sgd") return OptimizerKind::kSGD;
  if (name == "noisy_sgd" || name == "nsgd") return OptimizerKind::kNoisySGD;
  if (name == "dpsgd") return OptimizerKind::kDPSGD;
  throw ParseError("unknown optimizer '" + name + "'");
}

Vec Clip(const Vec& g, double c) {
  if (!(c > 0.0)) throw DomainError("Clip: threshold must be positive");
  const double norm = g.norm();
  if (norm >= c) return g * (c / norm);
  return g;
}

double LsqLoss(const Vec& theta, const Dataset& ds) {
  CheckSize(theta, ds.d(), "LsqLoss: theta");
  return (ds.x * theta - ds.y).squaredNorm() / (2.0 * ds.n());
}

LsqState LsqDiscreteStep(const LsqState& state, const Dataset& ds,
                         const OptimizerConfig& cfg, RngStream& rng) {
  CheckSize(state.theta, ds.d(), "LsqDiscreteStep: theta");
  if (!(cfg.gamma > 0.0)) throw DomainError("LsqDiscreteStep: gamma <= 0");
  if (!(cfg.sigma >= 0.0)) throw DomainError("LsqDiscreteStep: sigma < 0");
  CheckFinite(state.theta, state.step, "LsqDiscreteStep: non-finite state");
  const bool batched = cfg.kind != OptimizerKind::kGD;
  if (batched && (cfg.batch < 1 || cfg.batch > ds.n())) {
    throw DomainError("LsqDiscreteStep: batch must be in [1, n]");
  }

  Vec g;
  double noise_std = 0.0;
  switch (cfg.kind) {
    case OptimizerKind::kGD: {
      std::vector<int> rows(ds.n());
      for (int i = 0; i < ds.n(); ++i) rows[i] = i;
      g = MeanSampleGradient(ds, state.theta, rows, kInfinity);
      break;
    }
    case OptimizerKind::kSGD:
      g = MeanSampleGradient(ds, state.theta, SortedBatch(ds, cfg.batch, rng),
                             kInfinity);
      break;
    case OptimizerKind::kNoisySGD:
      g = MeanSampleGradient(ds, state.theta, SortedBatch(ds, cfg.batch, rng),
                             kInfinity);
      noise_std = cfg.sigma / cfg.batch;
      break;
    case OptimizerKind::kDPSGD:
      g = MeanSampleGradient(ds, state.theta, SortedBatch(ds, cfg.batch, rng),
                             cfg.clip);
      if (cfg.sigma > 0.0) {
        if (std::isinf(cfg.clip)) {
          throw DomainError("LsqDiscreteStep: DP-SGD noise needs finite clip");
        }
        noise_std = cfg.clip * cfg.sigma / cfg.batch;
      }
      break;
  }
  if (noise_std > 0.0) {
    Vec z(ds.d());
    rng.FillNormal(z);
    g += noise_std * z;
  }

  LsqState next;
  next.theta = state.theta - cfg.gamma * g;
  next.step = state.step + 1;
  next.time = next.step * cfg.gamma;
  CheckFinite(next.theta, next.step, "LsqDiscreteStep: iterate diverged");
  return next;
}

Vec LeastSquaresSolution(const Dataset& ds) {
  const Mat gram = ds.xbar.transpose() * ds.xbar;
  Eigen::LDLT<Mat> ldlt(gram);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.vectorD().minCoeff() <= 1e-12 * ldlt.vectorD().maxCoeff()) {
    throw DomainError("LeastSquaresSolution: Xbar^T Xbar is singular");
  }
  return ldlt.solve(ds.xbar.transpose() * ds.ybar);
}

StationaryLaw StationaryLawTheory(const Dataset& ds, double gamma, double eps,
                                  double sigma) {
  if (ds.regime != Regime::kUnderparameterized) {
    throw DomainError("StationaryLawTheory: needs an underparameterized set");
  }
  const int d = ds.d();
  const Mat gram = ds.xbar.transpose() * ds.xbar;
  Eigen::LDLT<Mat> ldlt(gram);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.vectorD().minCoeff() <= 1e-12 * ldlt.vectorD().maxCoeff()) {
    throw DomainError("StationaryLawTheory: Xbar^T Xbar is singular");
  }
  StationaryLaw law;
  law.mean = ldlt.solve(ds.xbar.transpose() * ds.ybar);
  law.cov = (gamma * eps * eps / 2.0) * Mat::Identity(d, d) +
            (sigma * sigma / 2.0) * ldlt.solve(Mat::Identity(d, d));
  law.cov = 0.5 * (law.cov + law.cov.transpose()).eval();
  return law;
}

OuResult SimulateOuUnder(const Dataset& ds, const OptimizerConfig& cfg,
                         const OuOptions& options, RngStream& rng) {
  if (ds.regime != Regime::kUnderparameterized) {
    throw DomainError("SimulateOuUnder: needs an underparameterized set");
  }
  const int n = ds.n();
  const int d = ds.d();
  const double h = cfg.SdeStep();
  if (!(h > 0.0)) throw DomainError("SimulateOuUnder: step must be positive");
  const Mat gram = ds.xbar.transpose() * ds.xbar;
  const Vec lambda = Eigen::SelfAdjointEigenSolver<Mat>(gram).eigenvalues();
  const double radius = std::max(std::abs(1.0 - h * lambda(0)),
                                 std::abs(1.0 - h * lambda(d - 1)));
  if (radius >= 1.0) {
    throw DomainError("SimulateOuUnder: step too large, I - h Xbar^T Xbar has "
                      "spectral radius " + std::to_string(radius));
  }
  if (options.steps <= 0 || options.thin < 1 || options.batches < 2 ||
      options.record_stride < 1) {
    throw DomainError("SimulateOuUnder: bad options");
  }
  const std::int64_t burn_in =
      options.burn_in >= 0 ? options.burn_in : options.steps / 10;
  if (burn_in >= options.steps) {
    throw DomainError("SimulateOuUnder: burn_in must be smaller than steps");
  }

  const StationaryLaw law =
      StationaryLawTheory(ds, cfg.gamma, cfg.eps_floor, cfg.sigma);
  const Vec c = ds.xbar.transpose() * ds.ybar;
  const double grad_scale = std::sqrt(h * cfg.gamma) * cfg.eps_floor;
  const double added_scale = std::sqrt(h) * cfg.sigma;
  const double expected_dev = law.cov.trace();

  OuResult result;
  result.trajectory.columns = {"t", "loss", "eta", "bound_rhs", "theta_norm"};
  std::vector<Vec> samples;
  samples.reserve((options.steps - burn_in) / options.thin + 1);

  Vec theta = Vec::Zero(d);
  Vec xi(n);
  Vec xi_tilde(d);
  for (std::int64_t step = 0;; ++step) {
    if (step % options.record_stride == 0 || step == options.steps) {
      result.trajectory.AddRow({step * h, LsqLoss(theta, ds),
                                (theta - law.mean).squaredNorm(), expected_dev,
                                theta.norm()});
    }
    if (step >= burn_in && (step - burn_in) % options.thin == 0) {
      samples.push_back(theta);
    }
    if (step == options.steps) break;
    rng.FillNormal(xi);
    rng.FillNormal(xi_tilde);
    theta += -h * (gram * theta - c) +
             grad_scale * (ds.xbar.transpose() * xi) + added_scale * xi_tilde;
    if (!theta.allFinite()) {
      throw DivergenceError("SimulateOuUnder: iterate diverged", step + 1);
    }
  }

  const std::int64_t m = static_cast<std::int64_t>(samples.size());
  if (m < options.batches) {
    throw DomainError("SimulateOuUnder: too few post burn-in samples");
  }
  result.samples = m;
  result.mean = Vec::Zero(d);
  for (const Vec& s : samples) result.mean += s;
  result.mean /= static_cast<double>(m);
  result.cov = Mat::Zero(d, d);
  for (const Vec& s : samples) {
    const Vec dev = s - result.mean;
    result.cov += dev * dev.transpose();
  }
  result.cov /= static_cast<double>(m);

  // Batch means over contiguous blocks.
  const std::int64_t per_batch = m / options.batches;
  Mat batch_means(d, options.batches);
  for (int b = 0; b < options.batches; ++b) {
    Vec acc = Vec::Zero(d);
    for (std::int64_t k = 0; k < per_batch; ++k) {
      acc += samples[b * per_batch + k];
    }
    batch_means.col(b) = acc / static_cast<double>(per_batch);
  }
  const Vec grand = batch_means.rowwise().mean();
  result.std_error = ((batch_means.colwise() - grand).rowwise().squaredNorm() /
                      static_cast<double>(options.batches - 1) /
                      static_cast<double>(options.batches))
                         .cwiseSqrt();
  return result;
}

Table EtaReport::ToTable() const {
  Table table;
  table.columns = {"t", "loss", "eta", "bound_rhs", "theta_norm"};
  for (size_t k = 0; k < t.size(); ++k) {
    table.AddRow(
        {t[k], mean_loss[k], mean_eta[k], bound_rhs[k], mean_theta_norm[k]});
  }
  return table;
}

double EtaBoundRhs(double gamma, int d, double sigma, double loss_integral) {
  return gamma * d * sigma * sigma * loss_integral;
}

namespace {

struct CoupledPath {
  std::vector<double> eta;
  std::vector<double> loss_integral;
  std::vector<double> loss;
  std::vector<double> theta_norm;
};

CoupledPath RunCoupledPath(const Dataset& ds, double gamma, double sigma,
                           double h, std::int64_t steps, std::int64_t stride,
                           RngStream& shared, RngStream& added) {
  const int n = ds.n();
  const int d = ds.d();
  const double sqrt_h = std::sqrt(h);
  CoupledPath path;
  Vec theta = Vec::Zero(d);
  Vec beta = Vec::Zero(d);
  Vec db(n);
  Vec db_tilde(d);
  double integral = 0.0;
  for (std::int64_t step = 0;; ++step) {
    const Vec r_theta = ds.xbar * theta - ds.ybar;
    const Vec r_beta = ds.xbar * beta - ds.ybar;
    const double loss_theta = 0.5 * r_theta.squaredNorm();
    const double loss_beta = 0.5 * r_beta.squaredNorm();
    if (step % stride == 0) {
      path.eta.push_back((theta - beta).squaredNorm());
      path.loss_integral.push_back(integral);
      path.loss.push_back(loss_beta);
      path.theta_norm.push_back(theta.norm());
    }
    if (step == steps) break;
    shared.FillNormal(db);
    added.FillNormal(db_tilde);
    db *= sqrt_h;
    db_tilde *= sqrt_h;
    const Vec common = ds.xbar.transpose() * db;
    theta += -h * (ds.xbar.transpose() * r_theta) +
             std::sqrt(gamma * loss_theta) * common;
    beta += -h * (ds.xbar.transpose() * r_beta) +
            std::sqrt(gamma * loss_beta) * (common + sigma * db_tilde);
    integral += loss_beta * h;
    if (!theta.allFinite() || !beta.allFinite()) {
      throw DivergenceError("SimulateCoupledOver: iterate diverged", step + 1);
    }
  }
  return path;
}

}  // namespace

EtaReport SimulateCoupledOver(const Dataset& ds, double gamma, double sigma,
                              std::uint64_t seed,
                              const CoupledOptions& options) {
  if (ds.regime != Regime::kOverparameterized) {
    throw DomainError("SimulateCoupledOver: needs an overparameterized set");
  }
  const double threshold = 1.0 / ds.xbar.squaredNorm();
  if (!(gamma > 0.0) || gamma > threshold * (1.0 + 1e-12)) {
    throw DomainError("SimulateCoupledOver: gamma must be in (0, 1/Tr(Xbar^T "
                      "Xbar)]");
  }
  if (!(sigma >= 0.0)) throw DomainError("SimulateCoupledOver: sigma < 0");
  if (options.steps < 0 || options.n_traj < 1 || options.record_stride < 1) {
    throw DomainError("SimulateCoupledOver: bad options");
  }
  const double h = options.h > 0.0 ? options.h : gamma;

  std::vector<CoupledPath> paths(options.n_traj);
  ParallelFor(options.n_traj, options.workers, [&](int k) {
    RngStream shared = RngStream::For(seed, k, StreamRole::kGradient);
    RngStream added = RngStream::For(seed, k, StreamRole::kNoisePlus);
    paths[k] = RunCoupledPath(ds, gamma, sigma, h, options.steps,
                              options.record_stride, shared, added);
  });

  EtaReport report;
  const size_t records = paths[0].eta.size();
  auto column_mean = [&](auto member, size_t k) {
    std::vector<double> values;
    values.reserve(paths.size());
    for (const auto& p : paths) values.push_back((p.*member)[k]);
    return OrderIndependentMean(std::move(values));
  };
  for (size_t k = 0; k < records; ++k) {
    report.t.push_back(static_cast<double>(k * options.record_stride) * h);
    report.mean_eta.push_back(column_mean(&CoupledPath::eta, k));
    report.mean_loss_integral.push_back(
        column_mean(&CoupledPath::loss_integral, k));
    report.bound_rhs.push_back(
        EtaBoundRhs(gamma, ds.d(), sigma, report.mean_loss_integral.back()));
    report.mean_loss.push_back(column_mean(&CoupledPath::loss, k));
    report.mean_theta_norm.push_back(column_mean(&CoupledPath::theta_norm, k));
  }
  report.eta.reserve(paths.size());
  report.loss_integral.reserve(paths.size());
  for (auto& p : paths) {
    report.eta.push_back(std::move(p.eta));
    report.loss_integral.push_back(std::move(p.loss_integral));
  }
  return report;
}

}  // namespace sgdlab

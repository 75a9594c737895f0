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

#include "sgdlab/experiment.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sgdlab/dln.h"
#include "sgdlab/errors.h"
#include "sgdlab/mirror.h"
#include "sgdlab/parallel.h"
#include "sgdlab/problems.h"

namespace sgdlab {
namespace {

const std::vector<double> kSigmaGrid = {0.0, 0.125, 0.25, 0.5, 1.0};

// Short decimal label used in curve and scalar names ("0.125", "1").
std::string Label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> SplitList(const std::string& value) {
  std::vector<std::string> items;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = Trim(item);
    if (!item.empty()) items.push_back(item);
  }
  if (items.empty()) throw ParseError("empty list '" + value + "'");
  return items;
}

std::int64_t ParseInt(const std::string& key, const std::string& value) {
  const double v = ParseDouble(value);
  if (v != std::floor(v) || std::abs(v) > 9e15) {
    throw ParseError(key + ": expected an integer, got '" + value + "'");
  }
  return static_cast<std::int64_t>(v);
}

template <typename T>
std::string JoinList(const std::vector<T>& items,
                     std::string (*fmt)(const T&)) {
  std::string out;
  for (size_t i = 0; i < items.size(); ++i) {
    if (i) out += ",";
    out += fmt(items[i]);
  }
  return out;
}

std::string FormatNumber(const double& v) { return FormatDouble(v); }
std::string FormatOptimizer(const OptimizerKind& k) { return OptimizerName(k); }

Dataset BuildDataset(const ExperimentConfig& cfg, bool underparameterized) {
  if (!cfg.dataset_path.empty()) return LoadDataset(cfg.dataset_path);
  RngStream rng = RngStream::For(cfg.data_seed, 0, StreamRole::kData);
  if (underparameterized) {
    return GenUnderparamRegression(cfg.n, cfg.d, cfg.label_noise, rng);
  }
  return GenSparseRegression(cfg.n, cfg.d, cfg.s, rng);
}

struct Stats {
  double mean = std::nan("");
  double std = std::nan("");
  int count = 0;
};

Stats Summarize(const std::vector<double>& values) {
  Stats st;
  st.count = static_cast<int>(values.size());
  if (values.empty()) return st;
  // One curve of length one per value.
  std::vector<std::vector<double>> points;
  points.reserve(values.size());
  for (double v : values) points.push_back({v});
  const auto [mean, std] = Aggregate(points);
  st.mean = mean[0];
  st.std = std[0];
  return st;
}

Curve MakeCurve(const std::string& name, const std::vector<double>& t,
                const std::vector<std::vector<double>>& curves) {
  Curve c;
  c.name = name;
  c.t = t;
  std::tie(c.mean, c.std) = Aggregate(curves);
  return c;
}

void AddStats(RunRecord& rec, const std::string& prefix, const Stats& st) {
  rec.scalars[prefix + ".mean"] = st.mean;
  rec.scalars[prefix + ".std"] = st.std;
}

// ---------------------------------------------------------------------------
// Discrete diagonal-network grids (fig3, appendix sweep, custom).

struct GridCell {
  OptimizerKind kind;
  double sigma;
  double alpha;
  std::string name;
};

struct DiscreteOutcome {
  bool ok = false;
  bool converged = false;
  std::string error;
  DlnRunResult run;
  double final_dist_sq = 0.0;
  double final_loss = 0.0;
  double alpha_inf_mean = 0.0;
};

struct CellResult {
  GridCell cell;
  Stats dist;
  int converged = 0;
  int failed = 0;
};

std::vector<GridCell> MakeCells(const ExperimentConfig& cfg) {
  std::vector<GridCell> cells;
  for (OptimizerKind kind : cfg.optimizers) {
    if (kind == OptimizerKind::kDPSGD) {
      throw DomainError("DP-SGD is not available for diagonal networks");
    }
    const std::vector<double> sigmas =
        kind == OptimizerKind::kNoisySGD ? cfg.sigmas : std::vector<double>{0};
    for (double alpha : cfg.alphas) {
      for (double sigma : sigmas) {
        std::string name = OptimizerName(kind);
        if (cfg.alphas.size() > 1) name += "_a" + Label(alpha);
        if (kind == OptimizerKind::kNoisySGD && cfg.sigmas.size() > 1) {
          name += "_s" + Label(sigma);
        }
        cells.push_back({kind, sigma, alpha, name});
      }
    }
  }
  return cells;
}

std::vector<CellResult> RunDiscreteGrid(const ExperimentConfig& cfg,
                                        const Dataset& ds, RunRecord& rec) {
  const DlnContext ctx(ds);
  const double gamma = cfg.gamma > 0.0 ? cfg.gamma : DefaultStepSize(ds);
  rec.scalars["gamma"] = gamma;
  const std::vector<GridCell> cells = MakeCells(cfg);
  const int seeds = cfg.seeds;
  DlnRunOptions options;
  options.max_steps = cfg.steps;
  options.record_stride = cfg.stride;

  std::vector<DiscreteOutcome> outcomes(cells.size() * seeds);
  ParallelFor(static_cast<int>(outcomes.size()), cfg.workers, [&](int task) {
    const GridCell& cell = cells[task / seeds];
    const int k = task % seeds;
    DiscreteOutcome& out = outcomes[task];
    OptimizerConfig oc;
    oc.kind = cell.kind;
    oc.gamma = gamma;
    oc.sigma = cell.sigma;
    oc.batch = cfg.batch;
    const Vec alpha = Vec::Constant(ds.d(), cell.alpha);
    try {
      out.run = RunDlnDiscrete(ctx, alpha, oc,
                               NoiseSchedule::LossScaled(cell.sigma),
                               cfg.seed, k, options);
      const Vec beta = out.run.final_state.Beta();
      out.final_loss = DlnLoss(beta, ds);
      out.final_dist_sq = ds.beta_star
                              ? (beta - *ds.beta_star).squaredNorm()
                              : std::nan("");
      out.alpha_inf_mean =
          EffectiveAlpha(alpha, ds, gamma, cell.sigma,
                         out.run.final_state.loss_integral)
              .mean();
      out.converged = out.run.converged;
      out.ok = true;
    } catch (const DivergenceError& e) {
      out.error = cell.name + " seed " + std::to_string(k) + ": " + e.what();
    }
  });

  std::vector<CellResult> results;
  for (size_t c = 0; c < cells.size(); ++c) {
    const GridCell& cell = cells[c];
    CellResult res;
    res.cell = cell;
    std::vector<double> dists, losses, alphas, rnorms;
    std::vector<std::vector<double>> dist_curves, loss_curves;
    std::vector<double> t;
    for (int k = 0; k < seeds; ++k) {
      DiscreteOutcome& out = outcomes[c * seeds + k];
      if (!out.ok) {
        ++res.failed;
        rec.failures.push_back(out.error);
        continue;
      }
      res.converged += out.converged;
      dists.push_back(out.final_dist_sq);
      losses.push_back(out.final_loss);
      alphas.push_back(out.alpha_inf_mean);
      rnorms.push_back(out.run.final_state.r_acc.norm());
      const Table& tr = out.run.trajectory;
      t = tr.Column("t");
      dist_curves.push_back(tr.Column("dist_to_beta_l0_sq"));
      loss_curves.push_back(tr.Column("loss"));
      rec.trajectories.emplace_back(cell.name + "_seed" + std::to_string(k),
                                    std::move(out.run.trajectory));
    }
    res.dist = Summarize(dists);
    AddStats(rec, cell.name + ".final_dist_sq", res.dist);
    AddStats(rec, cell.name + ".final_loss", Summarize(losses));
    AddStats(rec, cell.name + ".alpha_inf", Summarize(alphas));
    AddStats(rec, cell.name + ".r_inf_norm", Summarize(rnorms));
    rec.scalars[cell.name + ".converged"] = res.converged;
    rec.scalars[cell.name + ".failed"] = res.failed;
    if (!dist_curves.empty()) {
      rec.curves.push_back(
          MakeCurve(cell.name + "_dist_to_beta_l0_sq", t, dist_curves));
      rec.curves.push_back(MakeCurve(cell.name + "_loss", t, loss_curves));
    }
    results.push_back(res);
  }
  return results;
}

const CellResult* FindCell(const std::vector<CellResult>& cells,
                           OptimizerKind kind, double alpha) {
  for (const auto& c : cells) {
    if (c.cell.kind == kind && c.cell.alpha == alpha) return &c;
  }
  return nullptr;
}

void AddCompletionCheck(RunRecord& rec) {
  rec.checks.push_back({"all_runs_completed", rec.failures.empty(),
                        std::to_string(rec.failures.size()) + " failed runs"});
}

RunRecord RunFig3(const ExperimentConfig& cfg) {
  RunRecord rec;
  rec.config = cfg;
  const Dataset ds = BuildDataset(cfg, false);
  const auto cells = RunDiscreteGrid(cfg, ds, rec);
  AddCompletionCheck(rec);
  const double alpha = cfg.alphas.front();
  const CellResult* gd = FindCell(cells, OptimizerKind::kGD, alpha);
  const CellResult* sgd = FindCell(cells, OptimizerKind::kSGD, alpha);
  const CellResult* nsgd = FindCell(cells, OptimizerKind::kNoisySGD, alpha);
  if (gd && sgd && nsgd) {
    const bool complete =
        gd->failed == 0 && sgd->failed == 0 && nsgd->failed == 0;
    const double m_gd = gd->dist.mean;
    const double m_sgd = sgd->dist.mean;
    const double m_nsgd = nsgd->dist.mean;
    rec.checks.push_back(
        {"ordering_noisy_sgd_lt_sgd_lt_gd",
         complete && m_nsgd < m_sgd && m_sgd < m_gd,
         "final ||beta - beta*||^2: noisy_sgd " + FormatDouble(m_nsgd) +
             ", sgd " + FormatDouble(m_sgd) + ", gd " + FormatDouble(m_gd)});
    const double pooled =
        std::sqrt(0.5 * (sgd->dist.std * sgd->dist.std +
                         nsgd->dist.std * nsgd->dist.std));
    rec.scalars["gap_sgd_minus_noisy_sgd"] = m_sgd - m_nsgd;
    rec.scalars["gap_pooled_std"] = pooled;
    rec.checks.push_back({"gap_exceeds_pooled_std",
                          complete && m_sgd - m_nsgd > pooled,
                          "gap " + FormatDouble(m_sgd - m_nsgd) +
                              ", pooled std " + FormatDouble(pooled)});
  }
  return rec;
}

RunRecord RunAppendixSweep(const ExperimentConfig& cfg) {
  RunRecord rec;
  rec.config = cfg;
  const Dataset ds = BuildDataset(cfg, false);
  ExperimentConfig grid = cfg;
  grid.optimizers = {OptimizerKind::kNoisySGD};
  const auto cells = RunDiscreteGrid(grid, ds, rec);
  AddCompletionCheck(rec);
  for (double alpha : cfg.alphas) {
    Curve curve;
    curve.name = "final_dist_vs_sigma_a" + Label(alpha);
    bool complete = true;
    for (const auto& c : cells) {
      if (c.cell.alpha != alpha) continue;
      curve.t.push_back(c.cell.sigma);
      curve.mean.push_back(c.dist.mean);
      curve.std.push_back(c.dist.std);
      complete = complete && c.failed == 0;
    }
    std::string detail;
    const bool trend = TrendHolds(curve.mean, curve.std, false, &detail);
    rec.checks.push_back({"trend_nonincreasing_a" + Label(alpha),
                          complete && trend,
                          (complete ? "" : "missing runs; ") + detail});
    rec.curves.push_back(std::move(curve));
  }
  return rec;
}

RunRecord RunCustom(const ExperimentConfig& cfg) {
  RunRecord rec;
  rec.config = cfg;
  const Dataset ds = BuildDataset(cfg, false);
  RunDiscreteGrid(cfg, ds, rec);
  AddCompletionCheck(rec);
  return rec;
}

// ---------------------------------------------------------------------------
// Underparameterized stationary law.

RunRecord RunOu(const ExperimentConfig& cfg) {
  RunRecord rec;
  rec.config = cfg;
  const Dataset ds = BuildDataset(cfg, true);
  const Mat gram = ds.xbar.transpose() * ds.xbar;
  const double lambda_max =
      Eigen::SelfAdjointEigenSolver<Mat>(gram).eigenvalues().maxCoeff();
  const double gamma = cfg.gamma > 0.0 ? cfg.gamma : 0.1 / lambda_max;
  rec.scalars["gamma"] = gamma;

  OuOptions options;
  options.steps = cfg.steps;
  options.burn_in = cfg.burn_in;
  options.record_stride = cfg.stride;
  for (double sigma : cfg.sigmas) {
    const std::string tag = "s" + Label(sigma);
    OptimizerConfig oc;
    oc.gamma = gamma;
    oc.sigma = sigma;
    oc.eps_floor = cfg.eps_floor;
    const StationaryLaw law =
        StationaryLawTheory(ds, gamma, cfg.eps_floor, sigma);
    std::vector<OuResult> runs(cfg.seeds);
    ParallelFor(cfg.seeds, cfg.workers, [&](int k) {
      RngStream rng = RngStream::For(cfg.seed, k, StreamRole::kGradient);
      runs[k] = SimulateOuUnder(ds, oc, options, rng);
    });
    double worst_z = 0.0;
    double worst_cov = 0.0;
    std::vector<std::vector<double>> eta_curves;
    std::vector<double> t;
    for (int k = 0; k < cfg.seeds; ++k) {
      const OuResult& r = runs[k];
      const double z =
          ((r.mean - law.mean).cwiseAbs().array() / r.std_error.array())
              .maxCoeff();
      worst_z = std::max(worst_z, z);
      worst_cov = std::max(worst_cov,
                           (r.cov - law.cov).norm() / law.cov.norm());
      t = r.trajectory.Column("t");
      eta_curves.push_back(r.trajectory.Column("eta"));
      rec.trajectories.emplace_back("ou_" + tag + "_seed" + std::to_string(k),
                                    r.trajectory);
    }
    rec.scalars[tag + ".mean_max_abs_z"] = worst_z;
    rec.scalars[tag + ".cov_rel_frobenius"] = worst_cov;
    rec.scalars[tag + ".theory_cov_trace"] = law.cov.trace();
    rec.curves.push_back(MakeCurve("ou_" + tag + "_eta", t, eta_curves));
    rec.checks.push_back({tag + "_mean_within_3se", worst_z <= 3.0,
                          "max |mean - theta_LS| / SE = " +
                              FormatDouble(worst_z)});
    rec.checks.push_back({tag + "_cov_within_15pct", worst_cov <= 0.15,
                          "relative Frobenius error " +
                              FormatDouble(worst_cov)});
  }
  return rec;
}

// ---------------------------------------------------------------------------
// Coupled overparameterized SDEs.

RunRecord RunThm1(const ExperimentConfig& cfg) {
  RunRecord rec;
  rec.config = cfg;
  const Dataset ds = BuildDataset(cfg, false);
  const double gamma =
      cfg.gamma > 0.0 ? cfg.gamma : 1.0 / ds.xbar.squaredNorm();
  rec.scalars["gamma"] = gamma;
  CoupledOptions options;
  options.steps = cfg.steps;
  options.n_traj = cfg.n_traj;
  options.record_stride = cfg.stride;
  options.workers = cfg.workers;
  for (double sigma : cfg.sigmas) {
    const std::string tag = "s" + Label(sigma);
    const EtaReport report =
        SimulateCoupledOver(ds, gamma, sigma, cfg.seed, options);
    std::vector<std::vector<double>> bound_curves;
    for (const auto& li : report.loss_integral) {
      std::vector<double> b;
      for (double v : li) b.push_back(EtaBoundRhs(gamma, ds.d(), sigma, v));
      bound_curves.push_back(std::move(b));
    }
    rec.curves.push_back(MakeCurve("thm1_" + tag + "_eta", report.t,
                                   report.eta));
    rec.curves.push_back(MakeCurve("thm1_" + tag + "_bound_rhs", report.t,
                                   bound_curves));
    rec.trajectories.emplace_back("thm1_" + tag + "_means", report.ToTable());
    rec.scalars[tag + ".final_eta.mean"] = report.mean_eta.back();
    rec.scalars[tag + ".final_bound_rhs"] = report.bound_rhs.back();
    rec.scalars[tag + ".final_loss.mean"] = report.mean_loss.back();
    if (sigma == 0.0) {
      bool zero = true;
      for (const auto& e : report.eta) {
        for (double v : e) zero = zero && v == 0.0;
      }
      rec.checks.push_back({tag + "_eta_identically_zero", zero,
                            zero ? "eta == 0 on every trajectory"
                                 : "nonzero eta"});
      continue;
    }
    bool holds = true;
    double worst = 0.0;
    for (size_t k = 0; k < report.t.size(); ++k) {
      holds = holds && report.mean_eta[k] <= 1.1 * report.bound_rhs[k];
      if (report.bound_rhs[k] > 0.0) {
        worst = std::max(worst, report.mean_eta[k] / report.bound_rhs[k]);
      }
    }
    rec.scalars[tag + ".max_eta_over_bound"] = worst;
    rec.checks.push_back({tag + "_eta_below_1.1_bound", holds,
                          "max mean eta / bound = " + FormatDouble(worst)});
  }
  return rec;
}

}  // namespace

// ---------------------------------------------------------------------------
// Fig. 4 pipeline.

RunRecord ReproduceFig4(const ExperimentConfig& cfg) {
  RunRecord rec;
  rec.config = cfg;
  const Dataset ds = BuildDataset(cfg, false);
  if (ds.regime != Regime::kOverparameterized) {
    throw DomainError("fig4 needs an overparameterized instance");
  }
  const DlnContext ctx(ds);
  const double gamma = cfg.gamma > 0.0 ? cfg.gamma : DefaultStepSize(ds);
  const double alpha0 = cfg.alphas.front();
  const Vec alpha = Vec::Constant(ds.d(), alpha0);
  rec.scalars["gamma"] = gamma;
  DlnSdeOptions options;
  options.run.max_steps = cfg.steps;
  options.run.record_stride = cfg.stride;
  if (cfg.scheme == "em") {
    options.scheme = SdeScheme::kEulerMaruyama;
  } else if (cfg.scheme != "log") {
    throw DomainError("unknown SDE scheme '" + cfg.scheme + "'");
  }
  // Tolerance for comparing distances that are zero up to solver accuracy.
  constexpr double kDistTol = 1e-4;

  struct Outcome {
    bool ok = false;
    std::string error;
    Table trajectory;
    double dist = 0.0;
    double dist_l0_sq = 0.0;
    double r_norm = 0.0;
    double mu = 0.0;
    double alpha_inf_mean = 0.0;
    double final_loss = 0.0;
    double tilted_residual = 0.0;
    DistanceBoundReport bound;
  };
  const int seeds = cfg.seeds;
  const int sigmas = static_cast<int>(cfg.sigmas.size());
  std::vector<Outcome> outcomes(sigmas * seeds);
  ParallelFor(sigmas * seeds, cfg.workers, [&](int task) {
    const double sigma = cfg.sigmas[task / seeds];
    const int k = task % seeds;
    Outcome& out = outcomes[task];
    const std::string where =
        "sigma " + Label(sigma) + " seed " + std::to_string(k) + ": ";
    try {
      DlnRunResult run =
          SimulateDlnSde(ctx, alpha, NoiseSchedule::LossScaled(sigma), gamma,
                         gamma, cfg.seed, k, options);
      out.trajectory = std::move(run.trajectory);
      const Vec beta_inf = run.final_state.Beta();
      const Vec& r_inf = run.final_state.r_acc;
      out.final_loss = DlnLoss(beta_inf, ds);
      if (!run.converged) {
        out.error = where + "no convergence within " +
                    std::to_string(cfg.steps) + " steps (final loss " +
                    FormatDouble(out.final_loss) + ")";
        return;
      }
      const Vec alpha_inf = EffectiveAlpha(alpha, ds, gamma, sigma,
                                           run.final_state.loss_integral);
      out.alpha_inf_mean = alpha_inf.mean();
      const TiltedSolution star =
          SolveTilted(ds, alpha_inf, Vec::Zero(ds.d()));
      const TiltedSolution tilted = SolveTilted(ds, alpha_inf, r_inf);
      out.dist = (star.beta - beta_inf).norm();
      out.dist_l0_sq = ds.beta_star
                           ? (beta_inf - *ds.beta_star).squaredNorm()
                           : std::nan("");
      out.r_norm = r_inf.norm();
      out.mu = MuBound(alpha_inf, std::max(beta_inf.norm(), star.beta.norm()));
      out.bound =
          DistanceBoundCheck(beta_inf, star.beta, r_inf, out.mu, kDistTol);
      out.tilted_residual = (tilted.beta - beta_inf).norm();
      out.ok = true;
    } catch (const Error& e) {
      out.error = where + e.what();
    }
  });

  Curve dist_curve;
  dist_curve.name = "dist_vs_sigma";
  bool all_ok = true;
  bool bound_all = true;
  int bound_count = 0;
  std::optional<double> sigma0_dist;
  for (int si = 0; si < sigmas; ++si) {
    const double sigma = cfg.sigmas[si];
    const std::string tag = "s" + Label(sigma);
    std::vector<double> dists, dl0, rnorms, mus, alphas, losses, margins,
        tilted_residuals;
    std::vector<std::vector<double>> loss_curves, l0_curves;
    std::vector<double> t;
    int satisfied = 0;
    for (int k = 0; k < seeds; ++k) {
      Outcome& out = outcomes[si * seeds + k];
      if (!out.trajectory.rows.empty()) {
        t = out.trajectory.Column("t");
        loss_curves.push_back(out.trajectory.Column("loss"));
        l0_curves.push_back(out.trajectory.Column("dist_to_beta_l0_sq"));
        rec.trajectories.emplace_back(
            "sde_" + tag + "_seed" + std::to_string(k),
            std::move(out.trajectory));
      }
      if (!out.ok) {
        all_ok = false;
        bound_all = false;
        rec.failures.push_back(out.error);
        continue;
      }
      dists.push_back(out.dist);
      dl0.push_back(out.dist_l0_sq);
      rnorms.push_back(out.r_norm);
      mus.push_back(out.mu);
      alphas.push_back(out.alpha_inf_mean);
      losses.push_back(out.final_loss);
      margins.push_back(out.bound.lhs - out.bound.rhs);
      tilted_residuals.push_back(out.tilted_residual);
      satisfied += out.bound.satisfied;
      bound_all = bound_all && out.bound.satisfied;
    }
    bound_count += satisfied;
    const Stats st = Summarize(dists);
    dist_curve.t.push_back(sigma);
    dist_curve.mean.push_back(st.mean);
    dist_curve.std.push_back(st.std);
    if (sigma == 0.0 && st.count == seeds) {
      sigma0_dist = *std::max_element(dists.begin(), dists.end());
    }
    AddStats(rec, tag + ".dist", st);
    AddStats(rec, tag + ".dist_to_beta_l0_sq", Summarize(dl0));
    AddStats(rec, tag + ".r_inf_norm", Summarize(rnorms));
    AddStats(rec, tag + ".mu", Summarize(mus));
    AddStats(rec, tag + ".alpha_inf", Summarize(alphas));
    AddStats(rec, tag + ".final_loss", Summarize(losses));
    rec.scalars[tag + ".completed"] = st.count;
    rec.scalars[tag + ".distance_bound_satisfied"] = satisfied;
    rec.scalars[tag + ".distance_bound_margin.min"] =
        margins.empty() ? std::nan("")
                        : *std::min_element(margins.begin(), margins.end());
    rec.scalars[tag + ".tilted_residual.max"] =
        tilted_residuals.empty()
            ? std::nan("")
            : *std::max_element(tilted_residuals.begin(),
                                tilted_residuals.end());
    if (!loss_curves.empty()) {
      rec.curves.push_back(MakeCurve("sde_" + tag + "_loss", t, loss_curves));
      rec.curves.push_back(
          MakeCurve("sde_" + tag + "_dist_to_beta_l0_sq", t, l0_curves));
    }
  }

  rec.checks.push_back({"all_runs_converged", all_ok,
                        std::to_string(rec.failures.size()) + " of " +
                            std::to_string(sigmas * seeds) + " runs failed"});
  std::string detail;
  const bool trend = TrendHolds(dist_curve.mean, dist_curve.std, true, &detail);
  rec.checks.push_back({"trend_nondecreasing", all_ok && trend,
                        (all_ok ? "" : "missing runs; ") + detail});
  rec.checks.push_back({"distance_bound_all_runs", bound_all,
                        std::to_string(bound_count) + " of " +
                            std::to_string(sigmas * seeds) + " satisfied"});
  for (double s : cfg.sigmas) {
    if (s != 0.0) continue;
    const bool ok = sigma0_dist && *sigma0_dist <= kDistTol;
    rec.checks.push_back(
        {"sigma0_matches_untilted", ok,
         sigma0_dist ? "max distance " + FormatDouble(*sigma0_dist)
                     : "sigma = 0 runs missing"});
  }
  rec.curves.insert(rec.curves.begin(), std::move(dist_curve));
  return rec;
}

// ---------------------------------------------------------------------------

const char* ExperimentName(ExperimentId id) {
  switch (id) {
    case ExperimentId::kFig3:
      return "fig3";
    case ExperimentId::kFig4:
      return "fig4";
    case ExperimentId::kAppendixAlphaSweep:
      return "appendix_alpha_sweep";
    case ExperimentId::kOuStationary:
      return "ou_stationary";
    case ExperimentId::kThm1Bound:
      return "thm1_bound";
    case ExperimentId::kCustom:
      return "custom";
  }
  return "?";
}

ExperimentId ParseExperimentId(const std::string& name) {
  if (name == "fig3") return ExperimentId::kFig3;
  if (name == "fig4") return ExperimentId::kFig4;
  if (name == "appendix_alpha_sweep" || name == "appendix") {
    return ExperimentId::kAppendixAlphaSweep;
  }
  if (name == "ou_stationary" || name == "ou") {
    return ExperimentId::kOuStationary;
  }
  if (name == "thm1_bound" || name == "thm1") return ExperimentId::kThm1Bound;
  if (name == "custom") return ExperimentId::kCustom;
  throw ParseError("unknown experiment '" + name + "'");
}

ExperimentConfig DefaultConfig(ExperimentId id) {
  ExperimentConfig cfg;
  cfg.id = id;
  switch (id) {
    case ExperimentId::kFig3:
      cfg.optimizers = {OptimizerKind::kGD, OptimizerKind::kSGD,
                        OptimizerKind::kNoisySGD};
      break;
    case ExperimentId::kFig4:
      cfg.sigmas = kSigmaGrid;
      cfg.seeds = 10;
      break;
    case ExperimentId::kAppendixAlphaSweep:
      cfg.sigmas = kSigmaGrid;
      cfg.alphas = {0.1, 0.01};
      break;
    case ExperimentId::kOuStationary:
      cfg.n = 50;
      cfg.d = 5;
      cfg.s = 5;
      cfg.sigmas = {0.0, 0.3};
      cfg.seeds = 1;
      cfg.steps = 1100000;
      cfg.burn_in = 100000;
      cfg.stride = 1000;
      break;
    case ExperimentId::kThm1Bound:
      cfg.n = 10;
      cfg.d = 20;
      cfg.s = 5;
      cfg.sigmas = {0.5, 0.0};
      cfg.seeds = 1;
      cfg.steps = 2000;
      cfg.stride = 10;
      cfg.n_traj = 200;
      break;
    case ExperimentId::kCustom:
      cfg.optimizers = {OptimizerKind::kSGD, OptimizerKind::kNoisySGD};
      break;
  }
  return cfg;
}

void SetConfigValue(ExperimentConfig& cfg, const std::string& key,
                    const std::string& raw) {
  const std::string value = Trim(raw);
  auto positive_int = [&](std::int64_t lo) {
    const std::int64_t v = ParseInt(key, value);
    if (v < lo) throw ParseError(key + " must be >= " + std::to_string(lo));
    return v;
  };
  auto nonneg = [&] {
    const double v = ParseDouble(value);
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw ParseError(key + " must be finite and >= 0");
    }
    return v;
  };
  if (key == "experiment") {
    cfg.id = ParseExperimentId(value);
  } else if (key == "n") {
    cfg.n = static_cast<int>(positive_int(1));
  } else if (key == "d") {
    cfg.d = static_cast<int>(positive_int(1));
  } else if (key == "s") {
    cfg.s = static_cast<int>(positive_int(0));
  } else if (key == "data_seed") {
    cfg.data_seed = static_cast<std::uint64_t>(positive_int(0));
  } else if (key == "label_noise") {
    cfg.label_noise = nonneg();
  } else if (key == "dataset") {
    cfg.dataset_path = value;
  } else if (key == "optimizers") {
    cfg.optimizers.clear();
    for (const auto& item : SplitList(value)) {
      cfg.optimizers.push_back(ParseOptimizer(item));
    }
  } else if (key == "sigmas" || key == "alphas") {
    std::vector<double> values;
    for (const auto& item : SplitList(value)) {
      const double v = ParseDouble(item);
      if (!std::isfinite(v) || v < 0.0 || (key == "alphas" && v == 0.0)) {
        throw ParseError(key + ": bad value '" + item + "'");
      }
      values.push_back(v);
    }
    (key == "sigmas" ? cfg.sigmas : cfg.alphas) = std::move(values);
  } else if (key == "batch") {
    cfg.batch = static_cast<int>(positive_int(1));
  } else if (key == "gamma") {
    cfg.gamma = nonneg();
  } else if (key == "eps_floor") {
    cfg.eps_floor = nonneg();
  } else if (key == "scheme") {
    if (value != "log" && value != "em") {
      throw ParseError("scheme must be 'log' or 'em'");
    }
    cfg.scheme = value;
  } else if (key == "seeds") {
    cfg.seeds = static_cast<int>(positive_int(1));
  } else if (key == "seed") {
    cfg.seed = static_cast<std::uint64_t>(positive_int(0));
  } else if (key == "steps") {
    cfg.steps = positive_int(0);
  } else if (key == "stride") {
    cfg.stride = positive_int(1);
  } else if (key == "burn_in") {
    cfg.burn_in = positive_int(-1);
  } else if (key == "n_traj") {
    cfg.n_traj = static_cast<int>(positive_int(1));
  } else if (key == "workers") {
    cfg.workers = static_cast<int>(positive_int(0));
  } else if (key == "output") {
    cfg.output = value;
  } else {
    throw ParseError("unknown config key '" + key + "'");
  }
}

ExperimentConfig ParseConfig(std::istream& in) {
  ExperimentConfig cfg = DefaultConfig(ExperimentId::kCustom);
  std::string line;
  int lineno = 0;
  bool any = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError("config line " + std::to_string(lineno) +
                       ": expected key = value");
    }
    const std::string key = Trim(line.substr(0, eq));
    const std::string value = line.substr(eq + 1);
    try {
      if (key == "experiment") {
        if (any) throw ParseError("'experiment' must be the first key");
        cfg = DefaultConfig(ParseExperimentId(Trim(value)));
      } else {
        SetConfigValue(cfg, key, value);
      }
    } catch (const ParseError& e) {
      throw ParseError("config line " + std::to_string(lineno) + ": " +
                       e.what());
    }
    any = true;
  }
  return cfg;
}

ExperimentConfig LoadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path + "'");
  return ParseConfig(in);
}

std::vector<std::pair<std::string, std::string>> ConfigEntries(
    const ExperimentConfig& cfg) {
  return {
      {"experiment", ExperimentName(cfg.id)},
      {"n", std::to_string(cfg.n)},
      {"d", std::to_string(cfg.d)},
      {"s", std::to_string(cfg.s)},
      {"data_seed", std::to_string(cfg.data_seed)},
      {"label_noise", FormatDouble(cfg.label_noise)},
      {"dataset", cfg.dataset_path},
      {"optimizers", JoinList(cfg.optimizers, &FormatOptimizer)},
      {"sigmas", JoinList(cfg.sigmas, &FormatNumber)},
      {"alphas", JoinList(cfg.alphas, &FormatNumber)},
      {"batch", std::to_string(cfg.batch)},
      {"gamma", FormatDouble(cfg.gamma)},
      {"eps_floor", FormatDouble(cfg.eps_floor)},
      {"scheme", cfg.scheme},
      {"seeds", std::to_string(cfg.seeds)},
      {"seed", std::to_string(cfg.seed)},
      {"steps", std::to_string(cfg.steps)},
      {"stride", std::to_string(cfg.stride)},
      {"burn_in", std::to_string(cfg.burn_in)},
      {"n_traj", std::to_string(cfg.n_traj)},
  };
}

void WriteConfig(const ExperimentConfig& cfg, std::ostream& out) {
  for (const auto& [key, value] : ConfigEntries(cfg)) {
    if (value.empty()) continue;
    out << key << " = " << value << '\n';
  }
}

bool RunRecord::AllChecksPassed() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const Check& c) { return c.passed; });
}

const Check* RunRecord::FindCheck(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

std::pair<std::vector<double>, std::vector<double>> Aggregate(
    const std::vector<std::vector<double>>& curves) {
  if (curves.empty()) throw DomainError("Aggregate: no curves");
  const size_t len = curves.front().size();
  for (const auto& c : curves) {
    if (c.size() != len) throw DimensionError("Aggregate: length mismatch");
  }
  std::vector<double> mean(len), std(len);
  std::vector<double> column(curves.size());
  for (size_t k = 0; k < len; ++k) {
    for (size_t j = 0; j < curves.size(); ++j) column[j] = curves[j][k];
    mean[k] = OrderIndependentMean(column);
    for (size_t j = 0; j < curves.size(); ++j) {
      const double dev = curves[j][k] - mean[k];
      column[j] = dev * dev;
    }
    std[k] = std::sqrt(OrderIndependentMean(column));
  }
  return {mean, std};
}

bool TrendHolds(const std::vector<double>& means,
                const std::vector<double>& stds, bool increasing,
                std::string* detail) {
  if (means.size() != stds.size()) {
    throw DimensionError("TrendHolds: length mismatch");
  }
  int inversions = 0;
  bool small = true;
  std::string text;
  for (size_t i = 0; i + 1 < means.size(); ++i) {
    const double step = means[i + 1] - means[i];
    if (std::isnan(step)) {
      small = false;
      text += "missing point at index " + std::to_string(i + 1) + "; ";
      continue;
    }
    const bool inverted = increasing ? step < 0.0 : step > 0.0;
    if (!inverted) continue;
    ++inversions;
    const double pooled =
        std::sqrt(0.5 * (stds[i] * stds[i] + stds[i + 1] * stds[i + 1]));
    if (std::abs(step) > pooled) small = false;
    text += "inversion at index " + std::to_string(i) + " of size " +
            FormatDouble(std::abs(step)) + " (pooled std " +
            FormatDouble(pooled) + "); ";
  }
  if (detail) {
    *detail = text + std::to_string(inversions) + " inversion(s)";
  }
  return inversions <= 1 && small;
}

RunRecord RunExperiment(const ExperimentConfig& cfg) {
  if (cfg.seeds < 1 || cfg.stride < 1) {
    throw DomainError("config needs seeds >= 1 and stride >= 1");
  }
  if (cfg.sigmas.empty() || cfg.alphas.empty() || cfg.optimizers.empty()) {
    throw DomainError("config lists must be non-empty");
  }
  switch (cfg.id) {
    case ExperimentId::kFig3:
      return RunFig3(cfg);
    case ExperimentId::kFig4:
      return ReproduceFig4(cfg);
    case ExperimentId::kAppendixAlphaSweep:
      return RunAppendixSweep(cfg);
    case ExperimentId::kOuStationary:
      return RunOu(cfg);
    case ExperimentId::kThm1Bound:
      return RunThm1(cfg);
    case ExperimentId::kCustom:
      return RunCustom(cfg);
  }
  throw DomainError("unknown experiment");
}

namespace {

nlohmann::ordered_json NumberOrNull(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

}  // namespace

void WriteRunRecord(const RunRecord& record, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path root(dir);

  nlohmann::ordered_json curves = nlohmann::ordered_json::array();
  for (const Curve& c : record.curves) {
    Table table;
    table.columns = {"t", "mean", "std"};
    for (size_t k = 0; k < c.t.size(); ++k) {
      table.AddRow({c.t[k], c.mean[k], c.std[k]});
    }
    const std::string file = c.name + ".csv";
    WriteCsvFile(table, (root / file).string());
    curves.push_back(file);
  }
  if (!record.trajectories.empty()) {
    fs::create_directories(root / "traj");
    for (const auto& [name, table] : record.trajectories) {
      WriteCsvFile(table, (root / "traj" / (name + ".csv")).string());
    }
  }
  {
    std::ofstream out(root / "config.txt");
    WriteConfig(record.config, out);
  }

  nlohmann::ordered_json summary;
  summary["experiment"] = ExperimentName(record.config.id);
  nlohmann::ordered_json config;
  for (const auto& [key, value] : ConfigEntries(record.config)) {
    config[key] = value;
  }
  summary["config"] = config;
  nlohmann::ordered_json scalars = nlohmann::ordered_json::object();
  for (const auto& [key, value] : record.scalars) {
    scalars[key] = NumberOrNull(value);
  }
  summary["scalars"] = scalars;
  nlohmann::ordered_json checks = nlohmann::ordered_json::array();
  for (const Check& c : record.checks) {
    checks.push_back(
        {{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  }
  summary["checks"] = checks;
  summary["failures"] = record.failures;
  summary["curves"] = curves;
  summary["all_checks_passed"] = record.AllChecksPassed();
  std::ofstream out(root / "summary.json");
  out << summary.dump(2) << '\n';
  if (!out) throw Error("write to '" + dir + "/summary.json' failed");
}

std::string ResolveOutputDir(const ExperimentConfig& cfg,
                             const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("SGDLAB_OUT"); env && *env) {
    return (std::filesystem::path(env) / ExperimentName(cfg.id)).string();
  }
  if (!cfg.output.empty()) return cfg.output;
  return (std::filesystem::path("sgdlab_out") / ExperimentName(cfg.id))
      .string();
}

}  // namespace sgdlab
